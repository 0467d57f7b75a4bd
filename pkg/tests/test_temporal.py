import numpy as np
import pytest

from hdmapkit import (
    AlignedGrid,
    Diagnostics,
    GridMap,
    GridSpec,
    InvalidInputError,
    Pose2,
    align_grid,
    merge_grids,
    mo_loss,
    mo_loss_grad,
    rasterize_map,
)
from hdmapkit.checks import mo_grad_check
from hdmapkit.synth import SceneConfig, generate_scene


SPEC = GridSpec(width=40, height=20, resolution=0.5, x_min=-10.0, y_min=-5.0)


def random_grid(rng, spec=SPEC):
    return GridMap(spec, rng.random((spec.height, spec.width)))


class TestAlignGrid:
    def test_identity_alignment(self, rng):
        grid = random_grid(rng)
        pose = Pose2(4.0, -2.0, 0.6)
        aligned = align_grid(grid, pose, pose)
        assert aligned.valid.all()
        assert np.abs(aligned.values - grid.values).max() < 1e-12

    def test_integer_cell_shift_is_exact(self, rng):
        grid = random_grid(rng)
        aligned = align_grid(grid, Pose2(0, 0, 0), Pose2(3 * SPEC.resolution, 0, 0))
        # current cell (r, c) lands on past cell (r, c + 3)
        assert np.abs(aligned.values[:, : SPEC.width - 3] - grid.values[:, 3:]).max() < 1e-12
        assert aligned.valid[:, : SPEC.width - 3].all()
        assert not aligned.valid[:, SPEC.width - 3 :].any()

    def test_half_extent_shift_masks_half(self, rng):
        grid = random_grid(rng)
        shift = SPEC.width * SPEC.resolution / 2.0
        aligned = align_grid(grid, Pose2(0, 0, 0), Pose2(shift, 0, 0))
        assert int(aligned.valid.sum()) == SPEC.height * SPEC.width // 2

    def test_values_stay_in_unit_interval(self, rng):
        grid = random_grid(rng)
        aligned = align_grid(grid, Pose2(1.3, -0.4, 0.2), Pose2(-0.7, 2.2, -0.9))
        assert aligned.values.min() >= 0.0
        assert aligned.values.max() <= 1.0

    def test_rotation_alignment_against_manual_sampling(self, rng):
        # one occupied cell, quarter-turn ego rotation: occupied mass moves to
        # the cell whose current-frame center maps onto it
        values = np.zeros((20, 40))
        values[12, 25] = 1.0
        grid = GridMap(SPEC, values)
        aligned = align_grid(grid, Pose2(0, 0, np.pi / 2), Pose2(0, 0, 0))
        xs, ys = SPEC.cell_centers()
        x_occ, y_occ = xs[25], ys[12]  # past-frame coords of the occupied center
        # current point p samples the past at R(-pi/2) p = (p.y, -p.x)
        target_c = int(np.argmin(np.abs(xs - (-y_occ))))
        target_r = int(np.argmin(np.abs(ys - x_occ)))
        assert aligned.values[target_r, target_c] == pytest.approx(1.0, abs=1e-9)
        assert aligned.values.sum() == pytest.approx(1.0, abs=1e-6)


class TestMoLoss:
    def test_perfect_history_is_zero(self, rng):
        grid = random_grid(rng)
        pose = Pose2(1.0, 2.0, 0.3)
        aligned = align_grid(grid, pose, pose)
        assert mo_loss(grid, [aligned]) == pytest.approx(0.0, abs=1e-12)

    def test_full_disagreement_is_one(self):
        ones = GridMap(SPEC, np.ones((SPEC.height, SPEC.width)))
        zeros = AlignedGrid(np.zeros((SPEC.height, SPEC.width)), np.ones((SPEC.height, SPEC.width), bool))
        assert mo_loss(ones, [zeros]) == 1.0

    def test_matches_scalar_loop(self, rng):
        current = random_grid(rng)
        history = []
        for _ in range(3):
            history.append(
                AlignedGrid(rng.random(current.values.shape), rng.random(current.values.shape) > 0.3)
            )
        expected = 0.0
        for h in history:
            total, count = 0.0, 0
            for r in range(SPEC.height):
                for c in range(SPEC.width):
                    if h.valid[r, c]:
                        total += abs(current.values[r, c] - h.values[r, c])
                        count += 1
            expected += total / count
        assert mo_loss(current, history) == pytest.approx(expected, abs=1e-12)

    def test_empty_mask_term_flagged(self, rng):
        current = random_grid(rng)
        empty = AlignedGrid(np.zeros(current.values.shape), np.zeros(current.values.shape, bool))
        diag = Diagnostics()
        assert mo_loss(current, [empty], diag=diag) == 0.0
        assert diag.get("mo_empty_mask_terms") == 1

    def test_requires_history(self, rng):
        with pytest.raises(InvalidInputError):
            mo_loss(random_grid(rng), [])


class TestMoLossGrad:
    def test_identical_grids_zero_gradient(self, rng):
        grid = random_grid(rng)
        aligned = AlignedGrid(grid.values.copy(), np.ones(grid.values.shape, bool))
        assert np.all(mo_loss_grad(grid, [aligned]) == 0.0)

    def test_uniform_positive_gap(self):
        current = GridMap(SPEC, np.full((SPEC.height, SPEC.width), 0.8))
        aligned = AlignedGrid(np.zeros((SPEC.height, SPEC.width)), np.ones((SPEC.height, SPEC.width), bool))
        grad = mo_loss_grad(current, [aligned])
        assert np.allclose(grad, 1.0 / (SPEC.height * SPEC.width))

    def test_finite_difference_suite(self):
        result = mo_grad_check(seed=11, n_cases=20)
        assert result.max_rel_error <= 1e-4

    def test_corrupted_gradient_fails(self):
        result = mo_grad_check(seed=11, n_cases=2, corrupt=0.05)
        assert result.max_rel_error > 1e-4


class TestMergeGrids:
    def test_single_frame_at_target_pose(self, rng):
        grid = random_grid(rng)
        pose = Pose2(2.0, 1.0, -0.4)
        merged = merge_grids([(grid, pose)], pose)
        assert np.abs(merged.values - grid.values).max() < 1e-12

    def test_disjoint_frames_union(self):
        a = np.zeros((SPEC.height, SPEC.width))
        b = np.zeros((SPEC.height, SPEC.width))
        a[4, 5] = 1.0
        b[15, 30] = 1.0
        pose = Pose2()
        merged = merge_grids([(GridMap(SPEC, a), pose), (GridMap(SPEC, b), pose)], pose)
        assert merged.values[4, 5] == 1.0
        assert merged.values[15, 30] == 1.0
        assert merged.values.sum() == 2.0

    def test_permutation_invariant(self, rng):
        frames = [
            (random_grid(rng), Pose2(float(i) * 0.7, 0.1 * i, 0.05 * i)) for i in range(4)
        ]
        target = Pose2(1.0, 0.0, 0.0)
        base = merge_grids(frames, target).values
        shuffled = [frames[i] for i in (2, 0, 3, 1)]
        assert np.abs(merge_grids(shuffled, target).values - base).max() < 1e-12

    def test_values_clamped(self, rng):
        grid = GridMap(SPEC, np.ones((SPEC.height, SPEC.width)))
        pose = Pose2()
        merged = merge_grids([(grid, pose)] * 3, pose)
        assert merged.values.max() == 1.0


class TestStaticScenePremise:
    def test_temporal_consistency_of_static_scene(self):
        # non-integer cell step: alignment exercises real bilinear weights
        cfg = SceneConfig(seed=5, n_frames=5, step=1.0)
        frames = generate_scene(cfg)
        spec = GridSpec()
        rasters = [rasterize_map(f, spec) for f in frames]
        losses = []
        for t in range(1, len(frames)):
            history = [
                align_grid(rasters[i], frames[i].ego_pose, frames[t].ego_pose)
                for i in range(max(0, t - 2), t)
            ]
            losses.append(mo_loss(rasters[t], history) / len(history))
        assert max(losses) <= 0.02

    def test_merged_matches_single_shot(self):
        cfg = SceneConfig(seed=5, n_frames=5, step=1.5)
        frames = generate_scene(cfg)
        spec = GridSpec()
        rasters = [(rasterize_map(f, spec), f.ego_pose) for f in frames]
        target = frames[-1]
        merged = merge_grids(rasters, target.ego_pose)
        single = rasterize_map(target, spec)
        valid_all = np.ones((spec.height, spec.width), dtype=bool)
        for grid, pose in rasters:
            valid_all &= align_grid(grid, pose, target.ego_pose).valid
        m = merged.values >= 0.5
        s = single.values >= 0.5
        inter = (m & s & valid_all).sum()
        union = ((m | s) & valid_all).sum()
        assert union > 0
        assert inter / union >= 0.95
