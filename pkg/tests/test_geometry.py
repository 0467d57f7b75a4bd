import numpy as np
import pytest

from hdmapkit import (
    Category,
    DegenerateGeometryError,
    InvalidInputError,
    PolyInstance,
    Pose2,
    bbox_of,
    compose_poses,
    invert_pose,
    polyline_length,
    relative_pose,
    resample_polyline,
    transform_points,
)
from conftest import make_instance, random_pose, unit_square


class TestTransformPoints:
    def test_identity(self):
        out = transform_points(Pose2(), [[1.0, 2.0]])
        assert np.allclose(out, [[1.0, 2.0]])

    def test_pure_translation(self):
        out = transform_points(Pose2(1, 0, 0), [[0.0, 0.0]])
        assert np.allclose(out, [[1.0, 0.0]])

    def test_quarter_turn(self):
        out = transform_points(Pose2(0, 0, np.pi / 2), [[1.0, 0.0]])
        assert np.allclose(out, [[0.0, 1.0]], atol=1e-15)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInputError):
            transform_points(Pose2(), [[np.nan, 0.0]])

    def test_preserves_pairwise_distances(self, rng):
        pts = rng.uniform(-10, 10, (30, 2))
        d0 = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        for _ in range(20):
            moved = transform_points(random_pose(rng), pts)
            d1 = np.linalg.norm(moved[:, None] - moved[None, :], axis=2)
            assert np.abs(d0 - d1).max() < 1e-12


class TestRelativePose:
    def test_same_pose_is_identity(self):
        a = Pose2(3.0, -2.0, 0.7)
        rel = relative_pose(a, a)
        assert rel.x == pytest.approx(0.0, abs=1e-15)
        assert rel.y == pytest.approx(0.0, abs=1e-15)
        assert rel.yaw == pytest.approx(0.0, abs=1e-15)

    def test_forward_offset(self):
        rel = relative_pose(Pose2(0, 0, 0), Pose2(2, 0, 0))
        assert (rel.x, rel.y, rel.yaw) == (2.0, 0.0, 0.0)

    def test_round_trip_on_random_poses(self, rng):
        pts = rng.uniform(-15, 15, (10, 2))
        for _ in range(1000):
            a, b = random_pose(rng), random_pose(rng)
            fwd = relative_pose(a, b)
            back = relative_pose(b, a)
            restored = transform_points(back, transform_points(fwd, pts))
            assert np.abs(restored - pts).max() < 1e-10

    def test_matches_invert_compose(self, rng):
        for _ in range(100):
            a, b = random_pose(rng), random_pose(rng)
            via_compose = compose_poses(invert_pose(a), b)
            rel = relative_pose(a, b)
            assert rel.x == pytest.approx(via_compose.x, abs=1e-12)
            assert rel.y == pytest.approx(via_compose.y, abs=1e-12)
            assert rel.yaw == pytest.approx(via_compose.yaw, abs=1e-12)


class TestResamplePolyline:
    def test_segment_midpoint(self):
        inst = make_instance([[0, 0], [10, 0]])
        out = resample_polyline(inst, 3)
        assert np.allclose(out, [[0, 0], [5, 0], [10, 0]])

    def test_closed_square_recovers_corners(self):
        # equal arc spacing on a unit square lands exactly on the vertices
        out = resample_polyline(unit_square(), 4)
        assert np.allclose(out, [[0, 0], [1, 0], [1, 1], [0, 1]])

    def test_closed_square_against_dense_arclength_oracle(self, rng):
        inst = unit_square()
        n = 7
        out = resample_polyline(inst, n)
        # oracle: walk a very dense polygon sampling and pick nearest arc positions
        dense_t = np.linspace(0.0, 4.0, 400001)
        corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]], dtype=float)
        seg = np.clip(dense_t.astype(int), 0, 3)
        frac = dense_t - seg
        dense_pts = corners[seg] * (1 - frac[:, None]) + corners[seg + 1] * frac[:, None]
        for k in range(n):
            target = 4.0 * k / n
            idx = np.argmin(np.abs(dense_t - target))
            assert np.linalg.norm(out[k] - dense_pts[idx]) < 1e-4

    def test_degenerate_polyline_raises(self):
        inst = make_instance([[1, 1], [1, 1], [1, 1]])
        with pytest.raises(DegenerateGeometryError):
            resample_polyline(inst, 5)

    def test_needs_two_output_points(self):
        with pytest.raises(InvalidInputError):
            resample_polyline(make_instance([[0, 0], [1, 0]]), 1)

    def test_open_endpoints_preserved(self, rng):
        for _ in range(25):
            pts = rng.uniform(-5, 5, (rng.integers(2, 8), 2))
            inst = make_instance(pts)
            if polyline_length(inst) == 0:
                continue
            out = resample_polyline(inst, 9)
            assert np.array_equal(out[0], pts[0])
            assert np.array_equal(out[-1], pts[-1])

    def test_arc_length_behaviour(self, rng):
        # chords can only shorten a polyline, with equality on collinear runs
        collinear = make_instance([[0, 0], [1.3, 0], [2.1, 0], [7.5, 0]])
        out = resample_polyline(collinear, 13)
        resampled_len = np.linalg.norm(np.diff(out, axis=0), axis=1).sum()
        assert resampled_len == pytest.approx(7.5, abs=1e-9)

        for _ in range(20):
            pts = rng.uniform(-5, 5, (6, 2))
            inst = make_instance(pts)
            total = polyline_length(inst)
            out = resample_polyline(inst, 50)
            chord_len = np.linalg.norm(np.diff(out, axis=0), axis=1).sum()
            assert chord_len <= total + 1e-12
            # corner cutting vanishes as the sampling densifies (O(1/n))
            dense = resample_polyline(inst, 20000)
            dense_len = np.linalg.norm(np.diff(dense, axis=0), axis=1).sum()
            assert dense_len == pytest.approx(total, rel=1e-3)


class TestBBox:
    def test_two_point_box(self):
        box = bbox_of(make_instance([[0, 0], [2, 2]]))
        assert np.allclose(box.center, [1, 1])
        assert np.allclose(box.half_extents, [1, 1])

    def test_single_repeated_coordinate(self):
        box = bbox_of(make_instance([[3, 4], [3, 4.5]]))
        assert np.allclose(box.center, [3, 4.25])
        assert np.allclose(box.half_extents, [0, 0.25])

    def test_random_cloud_matches_minmax_scan(self, rng):
        for _ in range(50):
            pts = rng.uniform(-100, 100, (rng.integers(2, 40), 2))
            box = bbox_of(make_instance(pts))
            lo = np.array([min(p[0] for p in pts), min(p[1] for p in pts)])
            hi = np.array([max(p[0] for p in pts), max(p[1] for p in pts)])
            assert np.allclose(box.center, (lo + hi) / 2)
            assert np.allclose(box.half_extents, (hi - lo) / 2)


class TestTypes:
    def test_yaw_wraps_into_half_open_interval(self):
        assert Pose2(0, 0, 3 * np.pi).yaw == pytest.approx(np.pi)
        assert Pose2(0, 0, -np.pi).yaw == pytest.approx(np.pi)
        assert Pose2(0, 0, 2 * np.pi).yaw == pytest.approx(0.0)

    def test_closed_instance_rejects_duplicated_endpoint(self):
        with pytest.raises(InvalidInputError):
            PolyInstance(Category.BOUNDARY, [[0, 0], [1, 0], [0, 0]], closed=True)

    def test_instance_needs_two_points(self):
        with pytest.raises(InvalidInputError):
            PolyInstance(Category.BOUNDARY, [[0, 0]])

    def test_points_are_immutable(self):
        inst = make_instance([[0, 0], [1, 1]])
        with pytest.raises(ValueError):
            inst.points[0, 0] = 5.0
