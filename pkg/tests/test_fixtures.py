"""The shared fixtures (also consumed by the bindings package) stay honest:
the library must reproduce every frozen value exactly."""

import json
from pathlib import Path

import numpy as np

from hdmapkit import AnchorSamples, GridMap, GridSpec, Pose2, evaluate
from hdmapkit.contrastive import contrastive_loss_grad
from hdmapkit.fileio import parse_map_dict
from hdmapkit.temporal import align_grid, mo_loss, mo_loss_grad

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load(name):
    return json.loads((FIXTURES / name).read_text())


def test_contrastive_fixture_reproduces():
    doc = load("contrastive_case.json")
    req, expected = doc["request"], doc["expected"]
    groups = [
        AnchorSamples(np.array(a), np.array(p), np.array(n))
        for a, p, n in zip(req["anchors"], req["positives"], req["negatives"])
    ]
    loss, grads = contrastive_loss_grad(groups)
    assert loss == expected["loss"]
    for g, ea, ep, en in zip(
        grads, expected["grad_anchors"], expected["grad_positives"], expected["grad_negatives"]
    ):
        assert np.array_equal(g["anchor"], ea)
        assert np.array_equal(g["positive"], ep)
        assert np.array_equal(g["negatives"], en)


def test_mo_fixture_reproduces():
    doc = load("mo_case.json")
    req, expected = doc["request"], doc["expected"]
    h = len(req["current"]["values"])
    w = len(req["current"]["values"][0])
    spec = GridSpec(
        width=w, height=h, resolution=req["resolution"],
        x_min=req["x_min"], y_min=req["y_min"],
    )
    cur_pose = Pose2(**req["current"]["pose"])
    current = GridMap(spec, np.array(req["current"]["values"]))
    history = [
        align_grid(GridMap(spec, np.array(e["values"])), Pose2(**e["pose"]), cur_pose)
        for e in req["history"]
    ]
    assert mo_loss(current, history) == expected["loss"]
    assert np.array_equal(mo_loss_grad(current, history), np.array(expected["grad"]))


def test_eval_fixture_reproduces():
    doc = load("eval_case.json")
    preds = parse_map_dict(doc["pred"])
    gts = parse_map_dict(doc["gt"])
    report = evaluate(preds, gts)
    got = report.to_dict()
    assert got["mAP"] == doc["expected"]["mAP"]
    assert got["ap"] == doc["expected"]["ap"]
    assert got["counts"] == doc["expected"]["counts"]
