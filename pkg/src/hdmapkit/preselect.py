"""Initial vector-point selection from per-instance score maps.

Given one score channel per instance, the highest-scoring cells become the
initial vector points; their normalized coordinates index a feature field and
receive a deterministic sinusoidal position encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError, InvalidInputError
from .types import Diagnostics

# Snap tolerance when mapping normalized coordinates back onto the cell
# lattice; absorbs the rounding of a divide-then-multiply round trip.
_CELL_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class ScoreMap:
    """Per-instance score channels over a H x W grid; shape (N, H, W)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3:
            raise InvalidInputError(f"score map must have shape (N, H, W), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("score map must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class PointQuery:
    """Selected points per instance: normalized (col, row) coords + features."""

    coords: np.ndarray      # (N, P, 2) in [0, 1]^2
    features: np.ndarray    # (N, P, C)

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        features = np.asarray(self.features, dtype=float)
        if coords.ndim != 3 or coords.shape[-1] != 2:
            raise InvalidInputError(f"coords must have shape (N, P, 2), got {coords.shape}")
        if features.shape[:2] != coords.shape[:2]:
            raise InvalidInputError("coords and features disagree on (N, P)")
        if coords.size and (coords.min() < 0.0 or coords.max() > 1.0):
            raise InvalidInputError("normalized coords must lie in [0, 1]^2")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "features", features)


def topk_coords(channel, k: int) -> np.ndarray:
    """Normalized (col/W, row/H) coordinates of the k highest-scoring cells.

    Ties are broken toward the smaller row-major flat index.
    """
    channel = np.asarray(channel, dtype=float)
    if channel.ndim != 2:
        raise InvalidInputError(f"score channel must be 2D, got shape {channel.shape}")
    h, w = channel.shape
    if k > h * w:
        raise InvalidInputError(f"k={k} exceeds the {h * w} available cells")
    if k < 0:
        raise InvalidInputError("k must be >= 0")
    flat = channel.ravel()
    order = np.argsort(-flat, kind="stable")[:k]
    rows, cols = np.divmod(order, w)
    return np.stack([cols / w, rows / h], axis=1)


def flat_indices(coords, width: int, height: int, diag: Diagnostics | None = None) -> np.ndarray:
    """Row-major flat cell indices (col + row * width) for normalized coords.

    Out-of-range cells are clamped into the grid; clamp events are counted in
    the diagnostics rather than raised.
    """
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    if coords.shape[-1] != 2 or not np.all(np.isfinite(coords)):
        raise InvalidInputError("coords must be finite (col, row) pairs")
    cols = np.floor(coords[:, 0] * width + _CELL_EPS).astype(int)
    rows = np.floor(coords[:, 1] * height + _CELL_EPS).astype(int)
    clamped = int((cols < 0).sum() + (cols > width - 1).sum()
                  + (rows < 0).sum() + (rows > height - 1).sum())
    if clamped and diag is not None:
        diag.count("flat_index_clamped", clamped)
    cols = np.clip(cols, 0, width - 1)
    rows = np.clip(rows, 0, height - 1)
    return cols + rows * width


def gather_features(features, indices) -> np.ndarray:
    """Row-gather from a flattened (H*W, C) feature field."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise InvalidInputError(f"feature field must be (H*W, C), got shape {features.shape}")
    indices = np.asarray(indices, dtype=int)
    if indices.size and (indices.min() < 0 or indices.max() >= features.shape[0]):
        raise InvalidInputError("gather index out of range")
    return features[indices]


def encode_positions(coords, dim: int) -> np.ndarray:
    """Deterministic sinusoidal encoding of normalized (col, row) pairs.

    The first half of the vector encodes the column, the second half the row;
    within each half sin/cos entries alternate over frequencies pi * 2^i.
    Distinct grid cells map to distinct encodings.
    """
    if dim % 2 != 0 or dim < 2:
        raise InvalidConfigError(f"encoding dimension must be even and >= 2, got {dim}")
    coords = np.asarray(coords, dtype=float)
    squeeze = coords.ndim == 1
    coords = np.atleast_2d(coords)
    half = dim // 2
    n_freq = (half + 1) // 2
    freqs = np.pi * 2.0 ** np.arange(n_freq)
    out = np.empty(coords.shape[:-1] + (dim,))
    for axis in range(2):
        ang = coords[..., axis, None] * freqs
        block = np.empty(coords.shape[:-1] + (half,))
        block[..., 0::2] = np.sin(ang)[..., : block[..., 0::2].shape[-1]]
        block[..., 1::2] = np.cos(ang)[..., : block[..., 1::2].shape[-1]]
        out[..., axis * half : (axis + 1) * half] = block
    return out[0] if squeeze else out


def build_point_queries(
    score: ScoreMap,
    features,
    points_per_instance: int,
    diag: Diagnostics | None = None,
) -> PointQuery:
    """Select top-scoring cells per channel and build their point queries.

    ``features`` is the (H, W, C) field the selected cells are read from; the
    gathered feature of each point is summed with its position encoding, and
    the normalized coordinates double as the initial reference points.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 3 or features.shape[:2] != (score.height, score.width):
        raise InvalidInputError(
            f"feature field must have shape ({score.height}, {score.width}, C), "
            f"got {features.shape}"
        )
    c_dim = features.shape[2]
    flat_field = features.reshape(-1, c_dim)
    coords = np.empty((score.channels, points_per_instance, 2))
    feats = np.empty((score.channels, points_per_instance, c_dim))
    for ch in range(score.channels):
        xy = topk_coords(score.values[ch], points_per_instance)
        idx = flat_indices(xy, score.width, score.height, diag)
        feats[ch] = gather_features(flat_field, idx) + encode_positions(xy, c_dim)
        coords[ch] = xy
    return PointQuery(coords=coords, features=feats)
