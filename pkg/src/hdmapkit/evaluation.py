"""Chamfer-distance average precision over categories and thresholds.

Predictions are pooled across frames per (category, threshold) cell; a
prediction is a true positive when its Chamfer distance to a still-unmatched
ground-truth instance of the same frame and category stays within the
threshold, visiting predictions in descending score order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .geometry import bbox_of, resample_polyline
from .types import CATEGORIES, Category, Diagnostics, EvalConfig, LocalVectorMap, PolyInstance


def chamfer_distance(a, b) -> float:
    """Symmetric mean nearest-neighbor distance between two point sets."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("chamfer distance needs two nonempty point sets")
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return 0.5 * (float(d.min(axis=1).mean()) + float(d.min(axis=0).mean()))


def match_for_eval(
    preds: Sequence[np.ndarray],
    scores: Sequence[float],
    gts: Sequence[np.ndarray],
    threshold: float,
) -> np.ndarray:
    """TP/FP flags for resampled prediction point sets of one frame+category.

    Flags are returned in the order given (callers sort globally by score);
    matching itself visits predictions by descending score and greedily takes
    the nearest unmatched ground truth within the threshold.
    """
    if len(preds) != len(scores):
        raise InvalidInputError("pred and score counts differ")
    flags = np.zeros(len(preds), dtype=bool)
    if not preds:
        return flags
    order = np.argsort(-np.asarray(scores, dtype=float), kind="stable")
    taken = np.zeros(len(gts), dtype=bool)
    for i in order:
        best_j, best_cd = -1, np.inf
        for j, gt_pts in enumerate(gts):
            if taken[j]:
                continue
            cd = chamfer_distance(preds[i], gt_pts)
            if cd < best_cd:
                best_j, best_cd = j, cd
        if best_j >= 0 and best_cd <= threshold:
            taken[best_j] = True
            flags[i] = True
    return flags


def ap_single(
    scores,
    tp_flags,
    n_gt: int,
    diag: Diagnostics | None = None,
) -> float:
    """Area under the monotone precision envelope (all-point interpolation).

    Ties in score are resolved with false positives first, which makes the
    value independent of the input ordering and matches the precision/recall
    state at the end of each tied block.
    """
    if n_gt < 0:
        raise InvalidInputError("n_gt must be >= 0")
    scores = np.asarray(scores, dtype=float)
    tp_flags = np.asarray(tp_flags, dtype=bool)
    if scores.shape != tp_flags.shape:
        raise InvalidInputError("scores and flags must have equal length")
    if n_gt == 0:
        if diag is not None:
            diag.count("ap_no_ground_truth")
        return 0.0
    if scores.size == 0:
        return 0.0
    order = np.lexsort((tp_flags, -scores))
    tp = tp_flags[order]
    cum_tp = np.cumsum(tp)
    cum_fp = np.cumsum(~tp)
    precision = cum_tp / (cum_tp + cum_fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    # recall rises by exactly 1/n_gt at each TP, so the area is the envelope
    # summed at TP ranks; dividing once keeps perfect runs at exactly 1.0
    return float(envelope[tp].sum() / n_gt)


@dataclass(frozen=True)
class EvalReport:
    """AP per (category, threshold), per-category means, and mAP."""

    ap: dict
    category_ap: dict
    mean_ap: float
    counts: dict        # (category, threshold) -> {"tp", "fp", "fn"}
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        cats = list(self.category_ap)
        thresholds = sorted({thr for _, thr in self.ap})
        return {
            "ap": {
                cat.value: {f"{thr:g}": self.ap[(cat, thr)] for thr in thresholds}
                for cat in cats
            },
            "category_ap": {cat.value: v for cat, v in self.category_ap.items()},
            "mAP": self.mean_ap,
            "counts": {
                cat.value: {f"{thr:g}": self.counts[(cat, thr)] for thr in thresholds}
                for cat in cats
            },
            "metadata": self.metadata,
        }


def _in_range(inst: PolyInstance, cfg: EvalConfig) -> bool:
    half_x, half_y = cfg.range_x / 2.0, cfg.range_y / 2.0
    return bbox_of(inst).intersects(-half_x, half_x, -half_y, half_y)


def evaluate(
    preds: Sequence[LocalVectorMap],
    gts: Sequence[LocalVectorMap],
    cfg: EvalConfig | None = None,
    diag: Diagnostics | None = None,
) -> EvalReport:
    """Frame-aligned Chamfer-AP evaluation of predictions against ground truth.

    Instances whose bounding box misses the perception range are dropped on
    both sides; every kept instance is resampled to ``cfg.resample_n`` points.
    Detections are pooled over all frames before the precision/recall sweep;
    score-less predictions count as score 1. Categories that appear in
    neither predictions nor ground truth are left out of the mAP mean.
    """
    cfg = cfg or EvalConfig()
    if len(preds) != len(gts):
        raise InvalidInputError(f"frame count mismatch: {len(preds)} vs {len(gts)}")
    for p, g in zip(preds, gts):
        if p.frame_id != g.frame_id:
            raise InvalidInputError(f"frame ids diverge: {p.frame_id} vs {g.frame_id}")

    # per frame and category: resampled prediction/gt point sets
    per_cat: dict[Category, list] = {cat: [] for cat in CATEGORIES}
    for pmap, gmap in zip(preds, gts):
        for cat in CATEGORIES:
            p_inst = [i for i in pmap.instances if i.category == cat and _in_range(i, cfg)]
            g_inst = [i for i in gmap.instances if i.category == cat and _in_range(i, cfg)]
            p_pts = [resample_polyline(i, cfg.resample_n) for i in p_inst]
            p_scores = [1.0 if i.score is None else i.score for i in p_inst]
            g_pts = [resample_polyline(i, cfg.resample_n) for i in g_inst]
            per_cat[cat].append((p_pts, p_scores, g_pts))

    ap: dict = {}
    counts: dict = {}
    category_ap: dict = {}
    included = []
    for cat in CATEGORIES:
        frames = per_cat[cat]
        n_gt = sum(len(g) for _, _, g in frames)
        n_pred = sum(len(p) for p, _, _ in frames)
        if n_gt == 0 and n_pred == 0:
            continue
        included.append(cat)
        for thr in cfg.cd_thresholds:
            all_scores: list[float] = []
            all_flags: list[bool] = []
            for p_pts, p_scores, g_pts in frames:
                flags = match_for_eval(p_pts, p_scores, g_pts, thr)
                all_scores.extend(p_scores)
                all_flags.extend(flags.tolist())
            value = ap_single(all_scores, all_flags, n_gt, diag)
            tp = int(sum(all_flags))
            ap[(cat, thr)] = value
            counts[(cat, thr)] = {"tp": tp, "fp": len(all_flags) - tp, "fn": n_gt - tp}
        category_ap[cat] = float(np.mean([ap[(cat, t)] for t in cfg.cd_thresholds]))

    mean_ap = float(np.mean([category_ap[c] for c in included])) if included else 0.0
    metadata = {
        "pooling": "detections pooled across frames before the PR sweep",
        "excluded_categories": [c.value for c in CATEGORIES if c not in included],
        "cd_thresholds": list(cfg.cd_thresholds),
        "resample_n": cfg.resample_n,
        "range": [cfg.range_x, cfg.range_y],
    }
    return EvalReport(ap, category_ap, mean_ap, counts, metadata)
