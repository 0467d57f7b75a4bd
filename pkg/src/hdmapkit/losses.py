"""Supervised loss stack: focal classification, point L1, direction cosine,
discriminative instance-map terms, and the weighted combination."""

from __future__ import annotations

import math
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import defaults
from .errors import InvalidInputError
from .matching import apply_ordering, match_instances
from .geometry import resample_polyline
from .types import CATEGORIES, Category, Diagnostics, LossWeights, PolyInstance

_PT_FLOOR = 1e-12
_PROB_SUM_SLACK = 1e-6


def _probs_vector(probs) -> np.ndarray:
    if isinstance(probs, Mapping):
        vec = np.array([float(probs.get(c, 0.0)) for c in CATEGORIES])
    else:
        vec = np.asarray(probs, dtype=float).ravel()
    if np.any(vec < 0.0) or np.any(vec > 1.0) or not np.all(np.isfinite(vec)):
        raise InvalidInputError("class probabilities must lie in [0, 1]")
    if vec.sum() > 1.0 + _PROB_SUM_SLACK:
        raise InvalidInputError("class probabilities must sum to at most 1")
    return vec


def focal_loss(
    probs,
    target: Category | int | None,
    alpha: float = defaults.FOCAL_ALPHA,
    gamma: float = defaults.FOCAL_GAMMA,
    diag: Diagnostics | None = None,
) -> float:
    """Focal loss -alpha * (1 - p_t)^gamma * log(p_t) for one instance.

    ``target`` is a category (or its index into the fixed category order);
    ``None`` means background, whose probability is the mass left over by the
    listed categories. A vanishing p_t is floored at 1e-12 before the log and
    the event is counted in the diagnostics.
    """
    vec = _probs_vector(probs)
    if target is None:
        p_t = max(0.0, 1.0 - float(vec.sum()))
    elif isinstance(target, (int, np.integer)):
        p_t = float(vec[int(target)])
    else:
        p_t = float(vec[CATEGORIES.index(Category(target))])
    if p_t < _PT_FLOOR:
        p_t = _PT_FLOOR
        if diag is not None:
            diag.count("focal_pt_floored")
    return -alpha * (1.0 - p_t) ** gamma * math.log(p_t)


def classification_loss(
    prob_list: Sequence,
    targets: Sequence,
    alpha: float = defaults.FOCAL_ALPHA,
    gamma: float = defaults.FOCAL_GAMMA,
    diag: Diagnostics | None = None,
) -> float:
    """Sum of focal losses over a batch of (probs, target) pairs."""
    if len(prob_list) != len(targets):
        raise InvalidInputError("probability and target counts differ")
    return sum(focal_loss(p, t, alpha, gamma, diag) for p, t in zip(prob_list, targets))


class PointLoss(NamedTuple):
    total: float    # summed |dx| + |dy| over all matched points
    mean: float     # total / number of points


def point_loss(pred, gt) -> PointLoss:
    """L1 distance between matched point sequences (already ordered)."""
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape:
        raise InvalidInputError(f"point shapes differ: {pred.shape} vs {gt.shape}")
    total = float(np.abs(pred - gt).sum())
    return PointLoss(total, total / len(pred))


def direction_loss(pred, gt, closed: bool, diag: Diagnostics | None = None) -> float:
    """Mean (1 - cos angle) between corresponding edges of two polylines.

    Closed instances include the wrap-around edge. Edges of zero length in
    either sequence cannot define a direction; they are skipped and counted.
    """
    pred = np.asarray(pred, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if pred.shape != gt.shape or len(pred) < 2:
        raise InvalidInputError("direction loss needs two equally shaped sequences of >= 2 points")
    if closed:
        e_pred = np.roll(pred, -1, axis=0) - pred
        e_gt = np.roll(gt, -1, axis=0) - gt
    else:
        e_pred = np.diff(pred, axis=0)
        e_gt = np.diff(gt, axis=0)
    n_pred = np.linalg.norm(e_pred, axis=1)
    n_gt = np.linalg.norm(e_gt, axis=1)
    keep = (n_pred > 0) & (n_gt > 0)
    skipped = int((~keep).sum())
    if skipped and diag is not None:
        diag.count("direction_zero_edges", skipped)
    if not keep.any():
        return 0.0
    cos = (e_pred[keep] * e_gt[keep]).sum(axis=1) / (n_pred[keep] * n_gt[keep])
    return float(np.mean(1.0 - np.clip(cos, -1.0, 1.0)))


def instance_map_loss(
    instances: Sequence[np.ndarray],
    delta_v: float = defaults.DELTA_V,
    delta_d: float = defaults.DELTA_D,
) -> tuple[float, float]:
    """Discriminative pull/push terms over per-instance embedding clusters.

    Returns (variance term, distance term): the first hinges embeddings onto
    their instance mean within ``delta_v``, the second pushes instance means
    at least ``2 * delta_d`` apart, averaged over ordered distinct pairs.
    """
    clusters = [np.atleast_2d(np.asarray(f, dtype=float)) for f in instances]
    if any(c.shape[0] < 1 for c in clusters):
        raise InvalidInputError("each instance needs at least one embedding vector")
    c = len(clusters)
    if c == 0:
        return 0.0, 0.0

    means = [cl.mean(axis=0) for cl in clusters]
    l_var = 0.0
    for cl, mu in zip(clusters, means):
        dist = np.linalg.norm(cl - mu, axis=1)
        l_var += float(np.mean(np.maximum(dist - delta_v, 0.0) ** 2))
    l_var /= c

    if c < 2:
        return l_var, 0.0
    l_dist = 0.0
    for a in range(c):
        for b in range(c):
            if a == b:
                continue
            gap = np.linalg.norm(means[a] - means[b])
            l_dist += max(2.0 * delta_d - gap, 0.0) ** 2
    l_dist /= c * (c - 1)
    return l_var, l_dist


#: Recognized loss-term names, in combination order.
LOSS_TERMS = ("cls", "pts", "dirs", "cst", "ol", "var", "dist")


def combine_losses(parts: Mapping[str, float], weights: LossWeights) -> float:
    """Weighted total of the named loss terms; missing terms count as zero."""
    unknown = set(parts) - set(LOSS_TERMS)
    if unknown:
        raise InvalidInputError(f"unknown loss terms: {sorted(unknown)}")
    values = {k: float(parts.get(k, 0.0)) for k in LOSS_TERMS}
    if not all(math.isfinite(v) for v in values.values()):
        raise InvalidInputError("loss terms must be finite")
    w = weights.as_dict()
    return sum(w[k] * values[k] for k in LOSS_TERMS)


def supervised_losses(
    preds: Sequence[PolyInstance],
    gts: Sequence[PolyInstance],
    n_points: int = defaults.MATCH_N_POINTS,
    w_cls: float = defaults.MATCH_W_CLS,
    w_pts: float = defaults.MATCH_W_PTS,
    alpha: float = defaults.FOCAL_ALPHA,
    gamma: float = defaults.FOCAL_GAMMA,
    diag: Diagnostics | None = None,
) -> dict[str, float]:
    """Match two instance sets and evaluate the geometric/classification terms.

    Unmatched predictions are supervised as background and contribute no
    point or direction loss.
    """
    result = match_instances(preds, gts, w_cls, w_pts, n_points)
    gt_of = dict(result.pairs)

    cls = 0.0
    for i, pred in enumerate(preds):
        probs = pred.class_probs if pred.class_probs is not None else {pred.category: 1.0}
        target = gts[gt_of[i]].category if i in gt_of else None
        cls += focal_loss(probs, target, alpha, gamma, diag)

    pts_total = 0.0
    pts_points = 0
    dirs = 0.0
    for (pi, gi), ordering in zip(result.pairs, result.orderings):
        pred_pts = resample_polyline(preds[pi], n_points)
        gt_pts = apply_ordering(resample_polyline(gts[gi], n_points), ordering)
        pl = point_loss(pred_pts, gt_pts)
        pts_total += pl.total
        pts_points += n_points
        dirs += direction_loss(pred_pts, gt_pts, gts[gi].closed, diag)

    return {
        "cls": cls,
        "pts": pts_total,
        "pts_mean": pts_total / pts_points if pts_points else 0.0,
        "dirs": dirs,
        "n_matched": float(len(result.pairs)),
    }
