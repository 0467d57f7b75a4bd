"""File formats: versioned JSON map documents and PGM grid files.

Map files carry a whole frame sequence; grids are written as ASCII portable
graymaps (P2, 0..255) with a JSON sidecar describing geometry and pose. All
writes go through a temp file plus rename so readers never observe partial
content.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import MapFormatError
from .types import GridMap, GridSpec, LocalVectorMap, PolyInstance, Pose2

MAP_FORMAT_VERSION = 1


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def map_to_dict(frames) -> dict:
    doc_frames = []
    for f in frames:
        instances = []
        for inst in f.instances:
            entry = {
                "category": inst.category.value,
                "closed": inst.closed,
                "points": [[float(x), float(y)] for x, y in inst.points],
            }
            if inst.score is not None:
                entry["score"] = inst.score
            if inst.class_probs is not None:
                entry["class_probs"] = {c.value: p for c, p in inst.class_probs.items()}
            instances.append(entry)
        doc_frames.append(
            {
                "frame_id": f.frame_id,
                "timestamp": f.timestamp,
                "ego_pose": {"x": f.ego_pose.x, "y": f.ego_pose.y, "yaw": f.ego_pose.yaw},
                "instances": instances,
            }
        )
    return {"version": MAP_FORMAT_VERSION, "frames": doc_frames}


def write_map_json(path, frames) -> None:
    atomic_write_text(path, json.dumps(map_to_dict(frames), indent=1) + "\n")


class _Reader:
    """Walks a parsed JSON document, raising MapFormatError with field paths."""

    def __init__(self, path):
        self.path = path

    def fail(self, field, message):
        raise MapFormatError(self.path, message, field=field)

    def need(self, obj, field, kind, where):
        if not isinstance(obj, dict):
            self.fail(where, f"expected an object, got {type(obj).__name__}")
        if field not in obj:
            self.fail(f"{where}.{field}" if where else field, "missing required field")
        value = obj[field]
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.fail(f"{where}.{field}", f"expected a number, got {type(value).__name__}")
            value = float(value)
            if not math.isfinite(value):
                self.fail(f"{where}.{field}", "must be finite")
            return value
        if not isinstance(value, kind):
            self.fail(f"{where}.{field}", f"expected {kind.__name__}, got {type(value).__name__}")
        return value


def parse_map_dict(doc: dict, path="<memory>") -> list[LocalVectorMap]:
    r = _Reader(path)
    version = r.need(doc, "version", int, "")
    if version != MAP_FORMAT_VERSION:
        r.fail("version", f"unsupported version {version} (expected {MAP_FORMAT_VERSION})")
    frames_doc = r.need(doc, "frames", list, "")
    frames = []
    for i, fd_ in enumerate(frames_doc):
        where = f"frames[{i}]"
        frame_id = r.need(fd_, "frame_id", int, where)
        timestamp = r.need(fd_, "timestamp", float, where)
        pose_doc = r.need(fd_, "ego_pose", dict, where)
        pose = Pose2(
            r.need(pose_doc, "x", float, f"{where}.ego_pose"),
            r.need(pose_doc, "y", float, f"{where}.ego_pose"),
            r.need(pose_doc, "yaw", float, f"{where}.ego_pose"),
        )
        instances = []
        for j, idoc in enumerate(r.need(fd_, "instances", list, where)):
            iw = f"{where}.instances[{j}]"
            category = r.need(idoc, "category", str, iw)
            closed = r.need(idoc, "closed", bool, iw)
            points = r.need(idoc, "points", list, iw)
            if len(points) < 2:
                r.fail(f"{iw}.points", "an instance needs at least 2 points")
            for k, pt in enumerate(points):
                if (
                    not isinstance(pt, list)
                    or len(pt) != 2
                    or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in pt)
                ):
                    r.fail(f"{iw}.points[{k}]", "expected an [x, y] number pair")
            score = None
            if "score" in idoc:
                score = r.need(idoc, "score", float, iw)
            class_probs = None
            if "class_probs" in idoc:
                class_probs = r.need(idoc, "class_probs", dict, iw)
            try:
                instances.append(
                    PolyInstance(
                        category=category,
                        points=points,
                        closed=closed,
                        score=score,
                        class_probs=class_probs,
                    )
                )
            except ValueError as exc:
                r.fail(iw, str(exc))
        frames.append(
            LocalVectorMap(
                frame_id=frame_id, timestamp=timestamp, ego_pose=pose, instances=instances
            )
        )
    return frames


def read_map_json(path) -> list[LocalVectorMap]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MapFormatError(path, f"cannot read file: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapFormatError(path, f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    return parse_map_dict(doc, path)


def grid_sidecar_path(pgm_path) -> Path:
    return Path(str(pgm_path) + ".json")


def write_grid_pgm(path, grid: GridMap, pose: Pose2 | None = None) -> None:
    """Write a grid as ASCII PGM plus a JSON sidecar with its geometry."""
    levels = np.rint(grid.values * 255.0).astype(int)
    lines = ["P2", f"{grid.width} {grid.height}", "255"]
    lines.extend(" ".join(str(v) for v in row) for row in levels)
    atomic_write_text(path, "\n".join(lines) + "\n")
    spec = grid.spec
    sidecar = {
        "width": spec.width,
        "height": spec.height,
        "resolution": spec.resolution,
        "extent": {
            "x_min": spec.x_min,
            "x_max": spec.x_max,
            "y_min": spec.y_min,
            "y_max": spec.y_max,
        },
        "pose": None if pose is None else {"x": pose.x, "y": pose.y, "yaw": pose.yaw},
        "row_order": "row 0 anchors y_min",
    }
    atomic_write_text(grid_sidecar_path(path), json.dumps(sidecar, indent=1) + "\n")


def read_grid_pgm(path) -> tuple[GridMap, Pose2 | None]:
    path = Path(path)
    try:
        tokens = path.read_text().split()
    except OSError as exc:
        raise MapFormatError(path, f"cannot read file: {exc.strerror}") from exc
    if len(tokens) < 4 or tokens[0] != "P2":
        raise MapFormatError(path, "not an ASCII PGM (P2) file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        values = np.array([int(t) for t in tokens[4:]], dtype=float)
    except ValueError as exc:
        raise MapFormatError(path, f"bad PGM payload: {exc}") from exc
    if maxval != 255:
        raise MapFormatError(path, f"expected maxval 255, got {maxval}")
    if values.size != width * height:
        raise MapFormatError(path, f"expected {width * height} samples, got {values.size}")

    sidecar_path = grid_sidecar_path(path)
    try:
        sidecar = json.loads(sidecar_path.read_text())
    except OSError as exc:
        raise MapFormatError(sidecar_path, f"cannot read grid sidecar: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise MapFormatError(sidecar_path, f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    r = _Reader(sidecar_path)
    extent = r.need(sidecar, "extent", dict, "")
    spec = GridSpec(
        width=r.need(sidecar, "width", int, ""),
        height=r.need(sidecar, "height", int, ""),
        resolution=r.need(sidecar, "resolution", float, ""),
        x_min=r.need(extent, "x_min", float, "extent"),
        y_min=r.need(extent, "y_min", float, "extent"),
    )
    if (spec.width, spec.height) != (width, height):
        raise MapFormatError(path, "sidecar geometry disagrees with the PGM header")
    pose = None
    if sidecar.get("pose") is not None:
        p = sidecar["pose"]
        pose = Pose2(
            r.need(p, "x", float, "pose"),
            r.need(p, "y", float, "pose"),
            r.need(p, "yaw", float, "pose"),
        )
    return GridMap(spec, (values / 255.0).reshape(height, width)), pose
