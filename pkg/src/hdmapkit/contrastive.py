"""Temporal contrastive learning over aggregated instance features.

Per frame, the best-scoring instances of every category become anchors; each
anchor takes its nearest same-category instance from the history buffer as
the positive sample and the strongest other-category instances of the current
frame as negatives. The loss couples all anchors in one log-sum term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import defaults
from .errors import InvalidInputError
from .matching import match_points
from .geometry import resample_polyline
from .types import CATEGORIES, InstanceEmbedding, PolyInstance


def compute_instance_score(
    pred: PolyInstance,
    gt: PolyInstance | None,
    tau: float = defaults.INSTANCE_SCORE_TAU,
    n_points: int | None = None,
) -> float:
    """Joint class/location quality of a matched prediction, in [0, 1].

    ``p[gt.category] * max(0, 1 - mean_point_L1 / tau)``; an unmatched
    prediction (gt None) scores 0.
    """
    if gt is None:
        return 0.0
    if tau <= 0:
        raise InvalidInputError("tau must be positive")
    if pred.class_probs is None:
        p = 1.0 if pred.category == gt.category else 0.0
    else:
        p = float(pred.class_probs.get(gt.category, 0.0))
        if not 0.0 <= p <= 1.0:
            raise InvalidInputError(f"class probability {p} outside [0, 1]")
    if n_points is None:
        if pred.n_points != gt.n_points:
            raise InvalidInputError("point counts differ; pass n_points to resample")
        pred_pts, gt_pts = pred.points, gt.points
    else:
        pred_pts = resample_polyline(pred, n_points)
        gt_pts = resample_polyline(gt, n_points)
    _, cost = match_points(pred_pts, gt_pts, gt.closed)
    mean_l1 = cost / len(gt_pts)
    return p * max(0.0, 1.0 - mean_l1 / tau)


def select_anchors(
    current: Sequence[InstanceEmbedding],
    max_per_label: int = defaults.MAX_ANCHORS_PER_LABEL,
) -> list[InstanceEmbedding]:
    """Up to ``max_per_label`` highest-scoring instances of each category."""
    if max_per_label < 1:
        raise InvalidInputError("max_per_label must be >= 1")
    anchors = []
    for cat in CATEGORIES:
        group = [e for e in current if e.category == cat]
        group.sort(key=lambda e: -e.score)  # stable: input order breaks ties
        anchors.extend(group[:max_per_label])
    return anchors


def find_positive(
    anchor: InstanceEmbedding,
    history: Sequence[InstanceEmbedding],
    r_max: float = defaults.POSITIVE_RADIUS,
) -> InstanceEmbedding | None:
    """Nearest same-category history instance by box center, within r_max."""
    best = None
    best_d = math.inf
    for cand in history:
        if cand.category != anchor.category:
            continue
        d = float(np.linalg.norm(cand.bbox.center - anchor.bbox.center))
        if d < best_d:
            best, best_d = cand, d
    if best is None or best_d > r_max:
        return None
    return best


def find_negatives(
    anchor: InstanceEmbedding,
    current: Sequence[InstanceEmbedding],
    k_per_label: int = defaults.NEGATIVES_PER_LABEL,
) -> list[InstanceEmbedding]:
    """Top-k current-frame instances of every category other than the anchor's."""
    if k_per_label < 1:
        raise InvalidInputError("k_per_label must be >= 1")
    negatives = []
    for cat in CATEGORIES:
        if cat == anchor.category:
            continue
        group = [e for e in current if e.category == cat]
        group.sort(key=lambda e: -e.score)
        negatives.extend(group[:k_per_label])
    return negatives


@dataclass(frozen=True, eq=False)
class AnchorSamples:
    """One anchor feature with its positive (if any) and negative features."""

    anchor: np.ndarray
    positive: np.ndarray | None
    negatives: np.ndarray   # (K, D); K may be 0

    def __post_init__(self):
        anchor = np.asarray(self.anchor, dtype=float)
        negatives = np.asarray(self.negatives, dtype=float).reshape(-1, anchor.shape[0])
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "negatives", negatives)
        if self.positive is not None:
            positive = np.asarray(self.positive, dtype=float)
            if positive.shape != anchor.shape:
                raise InvalidInputError("positive must match the anchor dimension")
            object.__setattr__(self, "positive", positive)


def assemble_samples(
    current: Sequence[InstanceEmbedding],
    history: Sequence[InstanceEmbedding],
    max_per_label: int = defaults.MAX_ANCHORS_PER_LABEL,
    k_per_label: int = defaults.NEGATIVES_PER_LABEL,
    r_max: float = defaults.POSITIVE_RADIUS,
) -> list[AnchorSamples]:
    """Full mining pass: anchors, their positives from history, negatives."""
    groups = []
    for anchor in select_anchors(current, max_per_label):
        pos = find_positive(anchor, history, r_max)
        negs = find_negatives(anchor, current, k_per_label)
        groups.append(
            AnchorSamples(
                anchor=anchor.feature,
                positive=None if pos is None else pos.feature,
                negatives=np.array([n.feature for n in negs]).reshape(-1, len(anchor.feature)),
            )
        )
    return groups


def _logits(groups: Sequence[AnchorSamples]) -> np.ndarray:
    """All exponents v . k- minus v . k+ of the joint loss, flattened."""
    zs = []
    for g in groups:
        if g.positive is None or len(g.negatives) == 0:
            continue
        pos_dot = float(g.anchor @ g.positive)
        zs.append(g.negatives @ g.anchor - pos_dot)
    if not zs:
        return np.empty(0)
    return np.concatenate(zs)


def contrastive_loss(groups: Sequence[AnchorSamples], mean_over_anchors: bool = False) -> float:
    """log(1 + sum over anchors and negatives of exp(v.k- - v.k+)).

    Evaluated in a shifted log-sum-exp form so large exponents cannot
    overflow. Anchors without a positive are skipped; with no contributing
    terms the loss is exactly 0.
    """
    z = _logits(groups)
    if z.size == 0:
        return 0.0
    m = max(float(z.max()), 0.0)
    loss = m + math.log(math.exp(-m) + np.exp(z - m).sum())
    if mean_over_anchors:
        loss /= max(1, sum(1 for g in groups if g.positive is not None))
    return loss


def contrastive_loss_grad(
    groups: Sequence[AnchorSamples], mean_over_anchors: bool = False
) -> tuple[float, list[dict[str, np.ndarray | None]]]:
    """Loss plus exact gradients w.r.t. every anchor, positive, and negative.

    Returns per-group dicts with keys ``anchor``, ``positive``, ``negatives``
    shaped like the inputs; groups skipped by the loss get zero gradients.
    With L = log(1 + S), each exponent z contributes exp(z) / (1 + S).
    """
    z = _logits(groups)
    scale = 1.0
    if mean_over_anchors:
        scale = 1.0 / max(1, sum(1 for g in groups if g.positive is not None))
    if z.size == 0:
        loss = 0.0
        weights = np.empty(0)
    else:
        m = max(float(z.max()), 0.0)
        exps = np.exp(z - m)
        denom = math.exp(-m) + exps.sum()
        loss = (m + math.log(denom)) * scale
        weights = exps / denom * scale

    grads: list[dict[str, np.ndarray | None]] = []
    offset = 0
    for g in groups:
        d_anchor = np.zeros_like(g.anchor)
        d_neg = np.zeros_like(g.negatives)
        if g.positive is None:
            grads.append({"anchor": d_anchor, "positive": None, "negatives": d_neg})
            continue
        d_pos = np.zeros_like(g.positive)
        k = len(g.negatives)
        if k:
            w = weights[offset : offset + k]
            offset += k
            d_anchor = (w[:, None] * (g.negatives - g.positive)).sum(axis=0)
            d_pos = -w.sum() * g.anchor
            d_neg = w[:, None] * g.anchor
        grads.append({"anchor": d_anchor, "positive": d_pos, "negatives": d_neg})
    return loss, grads
