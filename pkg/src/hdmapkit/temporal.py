"""Temporal grid alignment, the map-occupancy consistency loss, and merging.

Historical grids are pulled into the current ego frame by sampling them at
the back-transformed cell centers (bilinear interpolation); samples falling
outside the source extent are masked out instead of zero-filled so unseen
regions never get penalized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .geometry import relative_pose, transform_points
from .types import Diagnostics, GridMap, Pose2

# Sampling positions this close to the extent border still count as valid;
# absorbs pose-arithmetic rounding at exact-overlap alignments.
_EDGE_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class AlignedGrid:
    """A past grid resampled into the current frame, with validity mask."""

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        valid = np.asarray(self.valid, dtype=bool)
        if values.shape != valid.shape:
            raise InvalidInputError("aligned values and mask must share a shape")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)


def _bilinear_sample(values: np.ndarray, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample values at fractional cell coords (u along cols, v along rows)."""
    h, w = values.shape
    valid = (u >= -_EDGE_EPS) & (u <= w - 1 + _EDGE_EPS) & \
            (v >= -_EDGE_EPS) & (v <= h - 1 + _EDGE_EPS)
    uc = np.clip(u, 0.0, w - 1.0)
    vc = np.clip(v, 0.0, h - 1.0)
    c0 = np.clip(np.floor(uc).astype(int), 0, max(w - 2, 0))
    r0 = np.clip(np.floor(vc).astype(int), 0, max(h - 2, 0))
    fu = uc - c0
    fv = vc - r0
    c1 = np.minimum(c0 + 1, w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    top = (1.0 - fu) * values[r0, c0] + fu * values[r0, c1]
    bot = (1.0 - fu) * values[r1, c0] + fu * values[r1, c1]
    out = (1.0 - fv) * top + fv * bot
    out[~valid] = 0.0
    return out, valid


def align_grid(past: GridMap, past_pose: Pose2, cur_pose: Pose2) -> AlignedGrid:
    """Resample a past grid at the current frame's cell centers.

    Both poses are world-frame ego poses; the output grid shares the past
    grid's geometry but is expressed in the current ego frame.
    """
    spec = past.spec
    xs, ys = spec.cell_centers()
    px, py = np.meshgrid(xs, ys)
    centers = np.column_stack([px.ravel(), py.ravel()])
    in_past = transform_points(relative_pose(past_pose, cur_pose), centers)
    u = (in_past[:, 0] - spec.x_min) / spec.resolution - 0.5
    v = (in_past[:, 1] - spec.y_min) / spec.resolution - 0.5
    sampled, valid = _bilinear_sample(past.values, u, v)
    shape = (spec.height, spec.width)
    return AlignedGrid(sampled.reshape(shape), valid.reshape(shape))


def mo_loss(
    current: GridMap,
    history: Sequence[AlignedGrid],
    diag: Diagnostics | None = None,
) -> float:
    """Sum over history frames of the mean |current - aligned| on valid cells.

    A history term whose mask is empty contributes 0 and is counted in the
    diagnostics.
    """
    if len(history) < 1:
        raise InvalidInputError("map-occupancy loss needs at least one history frame")
    total = 0.0
    for aligned in history:
        if aligned.values.shape != current.values.shape:
            raise InvalidInputError("aligned grid shape does not match the current grid")
        n = int(aligned.valid.sum())
        if n == 0:
            if diag is not None:
                diag.count("mo_empty_mask_terms")
            continue
        diff = np.abs(current.values - aligned.values)
        total += float(diff[aligned.valid].sum()) / n
    return total


def mo_loss_grad(current: GridMap, history: Sequence[AlignedGrid]) -> np.ndarray:
    """Subgradient of the map-occupancy loss w.r.t. the current grid values.

    Per valid cell: sum_i sign(current - aligned_i) / |valid_i|; the sign of
    an exact tie is 0.
    """
    if len(history) < 1:
        raise InvalidInputError("map-occupancy loss needs at least one history frame")
    grad = np.zeros_like(current.values)
    for aligned in history:
        if aligned.values.shape != current.values.shape:
            raise InvalidInputError("aligned grid shape does not match the current grid")
        n = int(aligned.valid.sum())
        if n == 0:
            continue
        term = np.sign(current.values - aligned.values) / n
        grad += np.where(aligned.valid, term, 0.0)
    return grad


def merge_grids(frames: Sequence[tuple[GridMap, Pose2]], target_pose: Pose2) -> GridMap:
    """Accumulate a grid sequence in the target frame (sum, clamped to [0, 1])."""
    if not frames:
        raise InvalidInputError("merge needs at least one frame")
    spec = frames[0][0].spec
    acc = np.zeros((spec.height, spec.width))
    for grid, pose in frames:
        if grid.spec != spec:
            raise InvalidInputError("all merged grids must share one geometry")
        aligned = align_grid(grid, pose, target_pose)
        acc += np.where(aligned.valid, aligned.values, 0.0)
    return GridMap(spec, np.clip(acc, 0.0, 1.0))
