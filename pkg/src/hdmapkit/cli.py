"""Command-line interface.

Subcommands: evaluate, rasterize, merge, losses, simulate, grad-check, and
kernel (a JSON-in/JSON-out surface for foreign-language wrappers). Exit
codes: 0 success, 1 validation failure, 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, defaults
from .checks import contrastive_grad_check, mo_grad_check
from .contrastive import AnchorSamples, contrastive_loss_grad
from .errors import (
    DegenerateGeometryError,
    InvalidConfigError,
    InvalidInputError,
    MapFormatError,
)
from .evaluation import evaluate
from .fileio import atomic_write_text, read_map_json, write_grid_pgm, write_map_json
from .losses import combine_losses, supervised_losses
from .raster import rasterize_map
from .synth import SceneConfig, generate_scene, simulate_predictions
from .temporal import align_grid, merge_grids, mo_loss, mo_loss_grad
from .types import EvalConfig, GridMap, GridSpec, LossWeights, Pose2

GRADCHECK_TOL = 1e-4


# ---------------------------------------------------------------------------
# configuration loading

def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise MapFormatError(path, f"cannot read config: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise MapFormatError(path, f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise MapFormatError(path, "config must be a JSON object")
    return doc


def _grid_spec(args, config: dict) -> GridSpec:
    section = config.get("grid", {})
    fields = {
        "width": defaults.GRID_WIDTH,
        "height": defaults.GRID_HEIGHT,
        "resolution": defaults.GRID_RESOLUTION,
        "x_min": defaults.GRID_X_MIN,
        "y_min": defaults.GRID_Y_MIN,
    }
    fields.update({k: section[k] for k in fields if k in section})
    if getattr(args, "resolution", None) is not None:
        fields["resolution"] = args.resolution
    if getattr(args, "grid", None) is not None:
        try:
            w, h = (int(v) for v in args.grid.lower().split("x"))
        except ValueError:
            raise InvalidConfigError(f"--grid expects WxH, got {args.grid!r}")
        fields["width"], fields["height"] = w, h
        # keep the grid centered on the ego unless the config pinned a corner
        if "x_min" not in section:
            fields["x_min"] = -w * fields["resolution"] / 2.0
        if "y_min" not in section:
            fields["y_min"] = -h * fields["resolution"] / 2.0
    return GridSpec(**fields)


def _eval_config(config: dict) -> EvalConfig:
    section = config.get("eval", {})
    return EvalConfig(
        cd_thresholds=tuple(section.get("cd_thresholds", defaults.CD_THRESHOLDS)),
        range_x=section.get("range_x", defaults.RANGE_X),
        range_y=section.get("range_y", defaults.RANGE_Y),
        resample_n=section.get("resample_n", defaults.RESAMPLE_N),
    )


def _weights(config: dict) -> LossWeights:
    section = config.get("weights", {})
    base = LossWeights().as_dict()
    unknown = set(section) - set(base)
    if unknown:
        raise InvalidConfigError(f"unknown loss weights: {sorted(unknown)}")
    base.update(section)
    return LossWeights(**base)


def _scene_config(config: dict, seed: int | None) -> SceneConfig:
    section = dict(config.get("scene", {}))
    for key in ("n_dividers", "n_crossings", "n_boundaries"):
        if key in section:
            section[key] = tuple(section[key])
    if seed is not None:
        section["seed"] = seed
    try:
        return SceneConfig(**section)
    except TypeError as exc:
        raise InvalidConfigError(f"bad scene config: {exc}")


def _raster_threshold(args, config: dict) -> float:
    if getattr(args, "threshold", None) is not None:
        return args.threshold
    return config.get("raster_threshold", defaults.RASTER_THRESHOLD)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    cfg = _eval_config(config)
    preds = read_map_json(args.pred)
    gts = read_map_json(args.gt)
    report = evaluate(preds, gts, cfg)

    label = "category"
    headers = [f"AP@{t:g}" for t in cfg.cd_thresholds] + ["mean"]
    print(f"{label:<22}" + "".join(f"{h:>9}" for h in headers))
    for cat, cat_ap in report.category_ap.items():
        row = [report.ap[(cat, t)] for t in cfg.cd_thresholds] + [cat_ap]
        print(f"{cat.value:<22}" + "".join(f"{v:>9.3f}" for v in row))
    pad = 9 * len(headers) - 9
    print(f"{'mAP':<22}" + " " * pad + f"{report.mean_ap:>9.3f}")

    if args.out:
        atomic_write_text(args.out, json.dumps(report.to_dict(), indent=1) + "\n")
    return 0


def _select_frame(frames, frame_id, default_last=False):
    if frame_id is None:
        return frames[-1] if default_last else frames[0]
    for f in frames:
        if f.frame_id == frame_id:
            return f
    raise InvalidInputError(f"frame_id {frame_id} not present in the map file")


def _cmd_rasterize(args) -> int:
    config = _load_config(args.config)
    spec = _grid_spec(args, config)
    threshold = _raster_threshold(args, config)
    frames = read_map_json(args.map)
    if not frames:
        raise InvalidInputError("map file contains no frames")
    frame = _select_frame(frames, args.frame)
    grid = rasterize_map(frame, spec, threshold)
    write_grid_pgm(args.out, grid, frame.ego_pose)
    occupied = int((grid.values > 0).sum())
    print(f"rasterized frame {frame.frame_id}: {occupied} occupied cells -> {args.out}")
    return 0


def _cmd_merge(args) -> int:
    config = _load_config(args.config)
    spec = _grid_spec(args, config)
    threshold = _raster_threshold(args, config)
    frames = read_map_json(args.map)
    if not frames:
        raise InvalidInputError("map file contains no frames")
    target = _select_frame(frames, args.frame, default_last=True)
    rasters = [(rasterize_map(f, spec, threshold), f.ego_pose) for f in frames]
    merged = merge_grids(rasters, target.ego_pose)
    write_grid_pgm(args.out, merged, target.ego_pose)
    occupied = int((merged.values > 0).sum())
    print(
        f"merged {len(frames)} frames into frame {target.frame_id}: "
        f"{occupied} occupied cells -> {args.out}"
    )
    return 0


def _cmd_losses(args) -> int:
    config = _load_config(args.config)
    weights = _weights(config)
    spec = _grid_spec(args, config)
    threshold = _raster_threshold(args, config)
    window = int(config.get("temporal_window", defaults.TEMPORAL_WINDOW))
    preds = read_map_json(args.pred)
    gts = read_map_json(args.gt)
    if len(preds) != len(gts):
        raise InvalidInputError(f"frame count mismatch: {len(preds)} vs {len(gts)}")

    cls = pts = dirs = 0.0
    for pmap, gmap in zip(preds, gts):
        if pmap.frame_id != gmap.frame_id:
            raise InvalidInputError(f"frame ids diverge: {pmap.frame_id} vs {gmap.frame_id}")
        part = supervised_losses(list(pmap.instances), list(gmap.instances))
        cls += part["cls"]
        pts += part["pts"]
        dirs += part["dirs"]

    # map-occupancy consistency over the predicted sequence itself
    rasters = [rasterize_map(f, spec, threshold) for f in preds]
    ol = 0.0
    for t in range(1, len(preds)):
        history = [
            align_grid(rasters[i], preds[i].ego_pose, preds[t].ego_pose)
            for i in range(max(0, t - window), t)
        ]
        if history:
            ol += mo_loss(rasters[t], history)

    parts = {"cls": cls, "pts": pts, "dirs": dirs, "cst": 0.0, "ol": ol, "var": 0.0, "dist": 0.0}
    total = combine_losses(parts, weights)
    w = weights.as_dict()
    print(f"{'term':<8}{'value':>14}{'weight':>10}")
    for name in ("cls", "pts", "dirs", "cst", "ol", "var", "dist"):
        note = "" if name not in ("cst", "var", "dist") else "  (requires embeddings; not in map files)"
        print(f"{name:<8}{parts[name]:>14.6f}{w[name]:>10g}{note}")
    print(f"{'total':<8}{total:>14.6f}")
    if args.out:
        doc = {"parts": parts, "weights": w, "total": total}
        atomic_write_text(args.out, json.dumps(doc, indent=1) + "\n")
    return 0


def _cmd_simulate(args) -> int:
    config = _load_config(args.config)
    cfg = _scene_config(config, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    gts = generate_scene(cfg)
    preds = [simulate_predictions(f, cfg) for f in gts]
    gt_path = out_dir / "gt.json"
    pred_path = out_dir / "pred.json"
    write_map_json(gt_path, gts)
    write_map_json(pred_path, preds)
    n_gt = sum(len(f.instances) for f in gts)
    n_pred = sum(len(f.instances) for f in preds)
    print(f"seed {cfg.seed}: {len(gts)} frames, {n_gt} gt instances, {n_pred} predictions")
    print(f"wrote {gt_path} and {pred_path}")
    return 0


def _cmd_grad_check(args) -> int:
    section = _load_config(args.config).get("gradcheck", {})
    corrupt = 0.05 if args.inject_error else 0.0
    contrastive = contrastive_grad_check(
        seed=args.seed,
        n_cases=int(section.get("contrastive_cases", 50)),
        dim=int(section.get("dim", 8)),
        corrupt=corrupt,
    )
    mo = mo_grad_check(
        seed=args.seed, n_cases=int(section.get("mo_cases", 20)), corrupt=corrupt
    )
    ok = contrastive.passed(GRADCHECK_TOL) and mo.passed(GRADCHECK_TOL)
    print(
        f"contrastive: max rel err {contrastive.max_rel_error:.3e} "
        f"over {contrastive.n_components} components"
    )
    print(f"map-occupancy: max rel err {mo.max_rel_error:.3e} over {mo.n_components} components")
    print(f"gradient check: {'PASS' if ok else 'FAIL'} (tolerance {GRADCHECK_TOL:g})")
    return 0 if ok else 1


def _read_kernel_request(args) -> dict:
    if args.infile == "-":
        text = sys.stdin.read()
        source = "<stdin>"
    else:
        try:
            text = Path(args.infile).read_text()
        except OSError as exc:
            raise MapFormatError(args.infile, f"cannot read request: {exc.strerror}") from exc
        source = args.infile
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapFormatError(source, f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise MapFormatError(source, "kernel request must be a JSON object")
    return doc


def _kernel_contrastive(doc: dict) -> dict:
    try:
        anchors = np.asarray(doc["anchors"], dtype=float)
        positives = np.asarray(doc["positives"], dtype=float)
        negatives = np.asarray(doc["negatives"], dtype=float)
    except (KeyError, ValueError) as exc:
        raise InvalidInputError(f"bad contrastive request: {exc}")
    if anchors.ndim != 2 or positives.shape != anchors.shape:
        raise InvalidInputError(
            f"anchors and positives must both be (n, d); got {anchors.shape} and {positives.shape}"
        )
    if negatives.size == 0 and len(negatives) == anchors.shape[0]:
        # JSON drops the trailing dims of an all-empty (n, 0, d) array
        negatives = negatives.reshape(anchors.shape[0], 0, anchors.shape[1])
    if negatives.ndim != 3 or negatives.shape[::2] != (anchors.shape[0], anchors.shape[1]):
        raise InvalidInputError(
            f"negatives must be (n, k, d) matching anchors {anchors.shape}; got {negatives.shape}"
        )
    groups = [
        AnchorSamples(anchor=a, positive=p, negatives=n)
        for a, p, n in zip(anchors, positives, negatives)
    ]
    loss, grads = contrastive_loss_grad(groups)
    return {
        "loss": loss,
        "grad_anchors": [g["anchor"].tolist() for g in grads],
        "grad_positives": [g["positive"].tolist() for g in grads],
        "grad_negatives": [g["negatives"].tolist() for g in grads],
    }


def _kernel_mo(doc: dict) -> dict:
    def parse_grid(entry, spec_fields, where):
        values = np.asarray(entry.get("values"), dtype=float)
        if values.ndim != 2:
            raise InvalidInputError(f"{where}.values must be a 2D array")
        spec = GridSpec(
            width=values.shape[1], height=values.shape[0], **spec_fields
        )
        pose_doc = entry.get("pose", {"x": 0.0, "y": 0.0, "yaw": 0.0})
        pose = Pose2(pose_doc["x"], pose_doc["y"], pose_doc["yaw"])
        return GridMap(spec, values), pose

    spec_fields = {
        "resolution": float(doc.get("resolution", defaults.GRID_RESOLUTION)),
        "x_min": float(doc.get("x_min", defaults.GRID_X_MIN)),
        "y_min": float(doc.get("y_min", defaults.GRID_Y_MIN)),
    }
    if "current" not in doc or "history" not in doc:
        raise InvalidInputError("mo-loss request needs 'current' and 'history'")
    current, cur_pose = parse_grid(doc["current"], spec_fields, "current")
    history = []
    for i, entry in enumerate(doc["history"]):
        grid, pose = parse_grid(entry, spec_fields, f"history[{i}]")
        if grid.values.shape != current.values.shape:
            raise InvalidInputError(
                f"history[{i}] shape {grid.values.shape} does not match "
                f"current {current.values.shape}"
            )
        history.append(align_grid(grid, pose, cur_pose))
    return {
        "loss": mo_loss(current, history),
        "grad": mo_loss_grad(current, history).tolist(),
    }


def _cmd_kernel(args) -> int:
    doc = _read_kernel_request(args)
    if args.op == "contrastive-loss":
        result = _kernel_contrastive(doc)
    else:
        result = _kernel_mo(doc)
    text = json.dumps(result) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdmapkit",
        description="Vectorized HD map toolkit: evaluation, rasterization, "
        "temporal merging, losses, and synthetic scenes.",
    )
    parser.add_argument("--version", action="version", version=f"hdmapkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, seed=False, out=False, grid=False):
        if config:
            p.add_argument("--config", help="JSON config file overriding defaults")
        if seed:
            p.add_argument("--seed", type=int, default=0, help="RNG seed")
        if out:
            p.add_argument("--out", help="output path")
        if grid:
            p.add_argument("--threshold", type=float, help="rasterization confidence threshold")
            p.add_argument("--resolution", type=float, help="grid resolution in meters/cell")
            p.add_argument("--grid", help="grid size as WxH cells, e.g. 400x200")

    p = sub.add_parser("evaluate", help="Chamfer-distance mAP of predictions vs ground truth")
    p.add_argument("pred")
    p.add_argument("gt")
    common(p, out=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("rasterize", help="rasterize one frame of a map file to a PGM grid")
    p.add_argument("map")
    p.add_argument("--frame", type=int, help="frame_id to rasterize (default: first)")
    common(p, out=True, grid=True)
    p.set_defaults(func=_cmd_rasterize, out_required=True)

    p = sub.add_parser("merge", help="align and merge all frames into a target frame's grid")
    p.add_argument("map")
    p.add_argument("--frame", type=int, help="target frame_id (default: last)")
    common(p, out=True, grid=True)
    p.set_defaults(func=_cmd_merge, out_required=True)

    p = sub.add_parser("losses", help="matching-based loss report for predictions vs ground truth")
    p.add_argument("pred")
    p.add_argument("gt")
    common(p, out=True, grid=True)
    p.set_defaults(func=_cmd_losses)

    p = sub.add_parser("simulate", help="generate a synthetic scene and noisy predictions")
    common(p, seed=True, out=True)
    p.set_defaults(func=_cmd_simulate, out_required=True)

    p = sub.add_parser("grad-check", help="finite-difference check of the analytic gradients")
    p.add_argument("--inject-error", action="store_true", help="negative control: corrupt gradients")
    common(p, seed=True)
    p.set_defaults(func=_cmd_grad_check)

    p = sub.add_parser("kernel", help="JSON-in/JSON-out numeric kernels for foreign bindings")
    p.add_argument("op", choices=["contrastive-loss", "mo-loss"])
    p.add_argument("--in", dest="infile", required=True, help="request JSON path ('-' for stdin)")
    common(p, config=False, out=True)
    p.set_defaults(func=_cmd_kernel)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out_required", False) and not args.out:
        parser.error(f"{args.command}: --out is required")
    if getattr(args, "seed", 0) < 0:
        parser.error("--seed must be a non-negative integer")
    try:
        return args.func(args)
    except MapFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InvalidInputError, InvalidConfigError, DegenerateGeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
