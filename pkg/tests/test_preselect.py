import numpy as np
import pytest

from hdmapkit import (
    Diagnostics,
    InvalidConfigError,
    InvalidInputError,
    ScoreMap,
    build_point_queries,
    encode_positions,
    flat_indices,
    gather_features,
    topk_coords,
)


class TestTopkCoords:
    def test_single_peak(self):
        channel = np.zeros((10, 10))
        channel[2, 3] = 5.0
        coords = topk_coords(channel, 1)
        assert np.allclose(coords, [[0.3, 0.2]])

    def test_tie_breaks_toward_lower_flat_index(self):
        channel = np.zeros((4, 4))
        channel[1, 2] = channel[3, 0] = 7.0  # flat 6 and 12
        coords = topk_coords(channel, 2)
        assert np.allclose(coords[0], [2 / 4, 1 / 4])
        assert np.allclose(coords[1], [0 / 4, 3 / 4])

    def test_matches_full_sort_oracle(self, rng):
        for _ in range(30):
            h, w = rng.integers(3, 12, size=2)
            channel = rng.uniform(-2, 2, (h, w))
            k = int(rng.integers(1, h * w + 1))
            coords = topk_coords(channel, k)
            cells = [(channel[r, c], -(c + r * w), c, r) for r in range(h) for c in range(w)]
            cells.sort(reverse=True)
            expected = np.array([[c / w, r / h] for _, _, c, r in cells[:k]])
            assert np.allclose(coords, expected)

    def test_selected_scores_dominate_unselected(self, rng):
        channel = rng.uniform(0, 1, (8, 9))
        k = 5
        coords = topk_coords(channel, k)
        idx = flat_indices(coords, 9, 8)
        picked = channel.ravel()[idx]
        assert np.all(np.diff(picked) <= 1e-15)
        unpicked = np.delete(channel.ravel(), idx)
        assert picked.min() >= unpicked.max()

    def test_k_too_large(self):
        with pytest.raises(InvalidInputError):
            topk_coords(np.zeros((2, 2)), 5)


class TestFlatIndices:
    def test_known_cell(self):
        # col 2, row 3 on a 10-wide grid
        assert flat_indices([[0.2, 0.3]], 10, 10)[0] == 32

    def test_corner_cells(self):
        assert flat_indices([[0.0, 0.0]], 7, 5)[0] == 0
        w, h = 7, 5
        coords = [[(w - 1) / w, (h - 1) / h]]
        assert flat_indices(coords, w, h)[0] == w * h - 1

    def test_inverse_of_normalization_on_cell_centers(self):
        w, h = 13, 9
        for r in range(h):
            for c in range(w):
                for col, row in [(c / w, r / h), ((c + 0.5) / w, (r + 0.5) / h)]:
                    assert flat_indices([[col, row]], w, h)[0] == c + r * w

    def test_clamping_counted(self):
        diag = Diagnostics()
        out = flat_indices([[1.0, 1.0]], 4, 4, diag=diag)
        assert out[0] == 15
        assert diag.get("flat_index_clamped") == 2


class TestGatherFeatures:
    def test_first_row(self, rng):
        field = rng.normal(size=(20, 6))
        assert np.array_equal(gather_features(field, [0])[0], field[0])

    def test_duplicates_duplicate(self, rng):
        field = rng.normal(size=(12, 3))
        out = gather_features(field, [4, 4, 4])
        assert np.array_equal(out[0], out[1])
        assert np.array_equal(out[1], out[2])

    def test_matches_scalar_loop(self, rng):
        field = rng.normal(size=(30, 5))
        idx = rng.integers(0, 30, size=17)
        out = gather_features(field, idx)
        for row, i in zip(out, idx):
            assert np.array_equal(row, field[i])

    def test_out_of_range_rejected(self):
        with pytest.raises(InvalidInputError):
            gather_features(np.zeros((4, 2)), [4])


class TestEncodePositions:
    def test_origin_pattern(self):
        enc = encode_positions([0.0, 0.0], 8)
        assert np.allclose(enc[0::2], 0.0)  # sin slots
        assert np.allclose(enc[1::2], 1.0)  # cos slots

    def test_deterministic(self):
        a = encode_positions([0.37, 0.81], 32)
        b = encode_positions([0.37, 0.81], 32)
        assert np.array_equal(a, b)

    def test_odd_dimension_rejected(self):
        with pytest.raises(InvalidConfigError):
            encode_positions([0.5, 0.5], 7)

    def test_injective_on_grid(self):
        n = 16
        cells = np.array([[(c + 0.5) / n, (r + 0.5) / n] for r in range(n) for c in range(n)])
        enc = encode_positions(cells, 32)
        d = np.linalg.norm(enc[:, None] - enc[None, :], axis=2)
        off_diag = d + np.eye(len(cells)) * 1e9
        assert off_diag.min() > 1e-6

    def test_nearest_neighbor_recovers_grid_cell(self, rng):
        n = 16
        cells = np.array([[(c + 0.5) / n, (r + 0.5) / n] for r in range(n) for c in range(n)])
        enc_cells = encode_positions(cells, 32)
        for _ in range(100):
            q = rng.random(2)
            truth = int(np.argmin(((cells - q) ** 2).sum(axis=1)))
            enc_q = encode_positions(q, 32)
            found = int(np.argmin(((enc_cells - enc_q) ** 2).sum(axis=1)))
            assert found == truth


class TestBuildPointQueries:
    def test_one_hot_channel_anchors_query(self, rng):
        h, w, c = 6, 8, 4
        score = np.zeros((1, h, w))
        score[0, 4, 5] = 1.0
        field = rng.normal(size=(h, w, c))
        q = build_point_queries(ScoreMap(score), field, points_per_instance=1)
        assert np.allclose(q.coords[0, 0], [5 / w, 4 / h])
        expected = field[4, 5] + encode_positions(np.array([5 / w, 4 / h]), c)
        assert np.allclose(q.features[0, 0], expected)

    def test_zero_field_leaves_pure_encodings(self):
        h, w, c = 5, 5, 6
        score = np.zeros((2, h, w))
        score[0, 1, 1] = 1.0
        score[1, 3, 2] = 1.0
        q = build_point_queries(ScoreMap(score), np.zeros((h, w, c)), points_per_instance=2)
        for ch in range(2):
            for p in range(2):
                assert np.allclose(q.features[ch, p], encode_positions(q.coords[ch, p], c))

    def test_matches_composition_of_parts(self, rng):
        h, w, c, p = 7, 9, 8, 4
        score = rng.uniform(0, 1, (3, h, w))
        field = rng.normal(size=(h, w, c))
        q = build_point_queries(ScoreMap(score), field, points_per_instance=p)
        flat = field.reshape(-1, c)
        for ch in range(3):
            coords = topk_coords(score[ch], p)
            idx = flat_indices(coords, w, h)
            feats = gather_features(flat, idx) + encode_positions(coords, c)
            assert np.allclose(q.coords[ch], coords)
            assert np.allclose(q.features[ch], feats)

    def test_coords_stay_normalized(self, rng):
        score = rng.uniform(0, 1, (2, 11, 13))
        field = rng.normal(size=(11, 13, 4))
        q = build_point_queries(ScoreMap(score), field, points_per_instance=6)
        assert q.coords.min() >= 0.0
        assert q.coords.max() <= 1.0
