#!/usr/bin/env python3
"""Regenerate the shared fixtures under fixtures/.

The fixtures pin kernel inputs alongside outputs computed by this package;
the Python suite asserts it still reproduces them and the bindings package
asserts parity across the language boundary.
"""

import json
from pathlib import Path

import numpy as np

from hdmapkit import AnchorSamples, GridMap, GridSpec, Pose2, evaluate
from hdmapkit.contrastive import contrastive_loss_grad
from hdmapkit.evaluation import EvalConfig
from hdmapkit.fileio import map_to_dict
from hdmapkit.synth import SceneConfig, generate_scene, simulate_predictions
from hdmapkit.temporal import align_grid, mo_loss, mo_loss_grad

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def contrastive_fixture():
    rng = np.random.default_rng(321)
    n, k, d = 3, 2, 6
    anchors = rng.normal(0, 0.8, (n, d))
    positives = rng.normal(0, 0.8, (n, d))
    negatives = rng.normal(0, 0.8, (n, k, d))
    groups = [
        AnchorSamples(a, p, negs) for a, p, negs in zip(anchors, positives, negatives)
    ]
    loss, grads = contrastive_loss_grad(groups)
    return {
        "request": {
            "anchors": anchors.tolist(),
            "positives": positives.tolist(),
            "negatives": negatives.tolist(),
        },
        "expected": {
            "loss": loss,
            "grad_anchors": [g["anchor"].tolist() for g in grads],
            "grad_positives": [g["positive"].tolist() for g in grads],
            "grad_negatives": [g["negatives"].tolist() for g in grads],
        },
    }


def mo_fixture():
    rng = np.random.default_rng(654)
    h, w = 8, 12
    spec = GridSpec(width=w, height=h, resolution=0.5, x_min=-3.0, y_min=-2.0)
    current_values = np.round(rng.random((h, w)), 6)
    cur_pose = Pose2(0.5, -0.25, 0.1)
    history_entries = []
    history_aligned = []
    for i in range(2):
        values = np.round(rng.random((h, w)), 6)
        pose = Pose2(0.5 - 0.5 * (i + 1), -0.25, 0.1 - 0.02 * (i + 1))
        history_entries.append(
            {"pose": {"x": pose.x, "y": pose.y, "yaw": pose.yaw}, "values": values.tolist()}
        )
        history_aligned.append(align_grid(GridMap(spec, values), pose, cur_pose))
    current = GridMap(spec, current_values)
    return {
        "request": {
            "resolution": spec.resolution,
            "x_min": spec.x_min,
            "y_min": spec.y_min,
            "current": {
                "pose": {"x": cur_pose.x, "y": cur_pose.y, "yaw": cur_pose.yaw},
                "values": current_values.tolist(),
            },
            "history": history_entries,
        },
        "expected": {
            "loss": mo_loss(current, history_aligned),
            "grad": mo_loss_grad(current, history_aligned).tolist(),
        },
    }


def eval_fixture():
    # noisy enough that the frozen APs sit strictly inside (0, 1)
    cfg = SceneConfig(
        seed=987, n_frames=3, point_sigma=0.45, drop_prob=0.2, fp_rate=0.3, score_sigma=0.1
    )
    gts = generate_scene(cfg)
    preds = [simulate_predictions(f, cfg) for f in gts]
    report = evaluate(preds, gts, EvalConfig())
    return {
        "pred": map_to_dict(preds),
        "gt": map_to_dict(gts),
        "expected": report.to_dict(),
    }


def main():
    FIXTURES.mkdir(exist_ok=True)
    (FIXTURES / "contrastive_case.json").write_text(
        json.dumps(contrastive_fixture(), indent=1) + "\n"
    )
    (FIXTURES / "mo_case.json").write_text(json.dumps(mo_fixture(), indent=1) + "\n")
    (FIXTURES / "eval_case.json").write_text(json.dumps(eval_fixture(), indent=1) + "\n")
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
