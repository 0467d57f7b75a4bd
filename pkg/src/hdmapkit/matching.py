"""Instance assignment and ordering-aware point correspondence.

Instances are paired by an optimal one-to-one assignment over a combined
class/geometry cost; within a matched pair the point sequences are aligned
over the admissible orderings (forward/reversed for open polylines, every
cyclic shift in both directions for closed ones) under Manhattan distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import defaults
from .errors import InvalidInputError
from .geometry import resample_polyline
from .types import PolyInstance


def solve_assignment(cost) -> list[tuple[int, int]]:
    """Globally optimal one-to-one assignment of min(n, m) pairs.

    Returns (row, col) pairs sorted by row. An empty matrix yields an empty
    assignment.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.size == 0:
        return []
    if cost.ndim != 2:
        raise InvalidInputError(f"cost matrix must be 2D, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise InvalidInputError("cost matrix must be finite")
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()))


@dataclass(frozen=True)
class PointOrdering:
    """How ground-truth points are traversed to line up with a prediction.

    ``shift`` is the cyclic offset (always 0 for open polylines); ``reverse``
    flips the traversal end to end before shifting. Index i of the prediction
    pairs with gt index (i + shift) mod N, or (shift + N-1 - i) mod N when
    reversed, so (reverse=True, shift=0) is the plain flip.
    """

    reverse: bool = False
    shift: int = 0

    def indices(self, n: int) -> np.ndarray:
        base = np.arange(n)
        if self.reverse:
            return (self.shift + n - 1 - base) % n
        return (base + self.shift) % n


FORWARD = PointOrdering(False, 0)


def apply_ordering(points: np.ndarray, ordering: PointOrdering) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return points[ordering.indices(len(points))]


def _candidate_orderings(n: int, closed: bool) -> list[PointOrdering]:
    # open polylines may only be kept or flipped end to end
    shifts = range(n) if closed else (0,)
    fwd = [PointOrdering(False, s) for s in shifts]
    rev = [PointOrdering(True, s) for s in shifts]
    return fwd + rev


def match_points(pred, gt, closed: bool) -> tuple[PointOrdering, float]:
    """Minimum total Manhattan distance over the admissible orderings.

    Ties prefer forward traversal, then the smallest shift.
    """
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[1] != 2:
        raise InvalidInputError(
            f"point sets must share shape (N, 2), got {pred.shape} vs {gt.shape}"
        )
    n = pred.shape[0]
    orderings = _candidate_orderings(n, closed)
    perms = np.stack([o.indices(n) for o in orderings])
    costs = np.abs(pred[None, :, :] - gt[perms]).sum(axis=(1, 2))
    best = int(np.argmin(costs))  # first minimum follows the candidate order
    return orderings[best], float(costs[best])


def _class_probability(pred: PolyInstance, category) -> float:
    if pred.class_probs is None:
        return 1.0 if pred.category == category else 0.0
    probs = pred.class_probs
    for p in probs.values():
        if not (0.0 <= p <= 1.0):
            raise InvalidInputError(f"class probability {p} outside [0, 1]")
    return float(probs.get(category, 0.0))


def instance_cost(
    pred: PolyInstance,
    gt: PolyInstance,
    w_cls: float = defaults.MATCH_W_CLS,
    w_pts: float = defaults.MATCH_W_PTS,
    n_points: int | None = None,
) -> float:
    """Pairing cost combining class probability and per-point geometry.

    ``cost = w_cls * (1 - p[gt.category]) + w_pts * point_cost / n`` where the
    point cost is the matched Manhattan total over ``n`` resampled points.
    With ``n_points=None`` the raw point sequences must already agree in
    length.
    """
    p = _class_probability(pred, gt.category)
    if n_points is None:
        if pred.n_points != gt.n_points:
            raise InvalidInputError(
                "point counts differ; pass n_points to resample before matching"
            )
        pred_pts, gt_pts = pred.points, gt.points
    else:
        pred_pts = resample_polyline(pred, n_points)
        gt_pts = resample_polyline(gt, n_points)
    _, cost = match_points(pred_pts, gt_pts, gt.closed)
    return w_cls * (1.0 - p) + w_pts * cost / len(gt_pts)


@dataclass(frozen=True)
class MatchResult:
    """One-to-one instance matching plus per-pair point correspondence."""

    pairs: tuple[tuple[int, int], ...]
    orderings: tuple[PointOrdering, ...]
    point_costs: tuple[float, ...]          # matched Manhattan totals, meters
    total_cost: float                       # assignment objective

    @property
    def matched_pred_indices(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.pairs)


def match_instances(
    preds: Sequence[PolyInstance],
    gts: Sequence[PolyInstance],
    w_cls: float = defaults.MATCH_W_CLS,
    w_pts: float = defaults.MATCH_W_PTS,
    n_points: int = defaults.MATCH_N_POINTS,
) -> MatchResult:
    """Assign predictions to ground truth and align each matched point pair."""
    if not preds or not gts:
        return MatchResult((), (), (), 0.0)
    cost = np.array(
        [[instance_cost(p, g, w_cls, w_pts, n_points) for g in gts] for p in preds]
    )
    pairs = solve_assignment(cost)
    orderings = []
    point_costs = []
    for pi, gi in pairs:
        pred_pts = resample_polyline(preds[pi], n_points)
        gt_pts = resample_polyline(gts[gi], n_points)
        ordering, pcost = match_points(pred_pts, gt_pts, gts[gi].closed)
        orderings.append(ordering)
        point_costs.append(pcost)
    total = float(sum(cost[pi, gi] for pi, gi in pairs))
    return MatchResult(tuple(pairs), tuple(orderings), tuple(point_costs), total)
