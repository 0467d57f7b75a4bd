"""Vector-to-grid conversion: polyline strokes on an occupancy grid.

A cell is occupied when its center lies within half a cell diagonal of any
segment, which yields a one-cell-thick stroke independent of resolution and
is symmetric under segment reversal.
"""

from __future__ import annotations

import math

import numpy as np

from . import defaults
from .types import GridMap, GridSpec, LocalVectorMap, PolyInstance


def stroke_radius(spec: GridSpec) -> float:
    """Half the cell diagonal: the default stroke half-width."""
    return spec.resolution * math.sqrt(2.0) / 2.0


def _segments(inst: PolyInstance) -> tuple[np.ndarray, np.ndarray]:
    pts = inst.points
    if inst.closed:
        return pts, np.roll(pts, -1, axis=0)
    return pts[:-1], pts[1:]


def _mark_segment(values: np.ndarray, spec: GridSpec, a: np.ndarray, b: np.ndarray, radius: float) -> None:
    # only cells inside the segment's padded bounding box can be hit
    res = spec.resolution
    lo_x, hi_x = min(a[0], b[0]) - radius, max(a[0], b[0]) + radius
    lo_y, hi_y = min(a[1], b[1]) - radius, max(a[1], b[1]) + radius
    c0 = max(0, int(math.floor((lo_x - spec.x_min) / res - 0.5)))
    c1 = min(spec.width - 1, int(math.ceil((hi_x - spec.x_min) / res - 0.5)))
    r0 = max(0, int(math.floor((lo_y - spec.y_min) / res - 0.5)))
    r1 = min(spec.height - 1, int(math.ceil((hi_y - spec.y_min) / res - 0.5)))
    if c0 > c1 or r0 > r1:
        return
    xs = spec.x_min + (np.arange(c0, c1 + 1) + 0.5) * res
    ys = spec.y_min + (np.arange(r0, r1 + 1) + 0.5) * res
    px, py = np.meshgrid(xs, ys)

    dx, dy = b[0] - a[0], b[1] - a[1]
    seg_sq = dx * dx + dy * dy
    if seg_sq == 0.0:
        dist = np.hypot(px - a[0], py - a[1])
    else:
        t = np.clip(((px - a[0]) * dx + (py - a[1]) * dy) / seg_sq, 0.0, 1.0)
        dist = np.hypot(px - (a[0] + t * dx), py - (a[1] + t * dy))
    hit = dist <= radius
    values[r0 : r1 + 1, c0 : c1 + 1][hit] = 1.0


def rasterize_instance(
    inst: PolyInstance,
    spec: GridSpec | None = None,
    radius: float | None = None,
) -> GridMap:
    """Stroke one instance's polyline (boundary only for closed shapes)."""
    spec = spec or GridSpec()
    radius = stroke_radius(spec) if radius is None else radius
    values = np.zeros((spec.height, spec.width))
    starts, ends = _segments(inst)
    for a, b in zip(starts, ends):
        _mark_segment(values, spec, a, b, radius)
    return GridMap(spec, values)


def rasterize_map(
    vmap: LocalVectorMap,
    spec: GridSpec | None = None,
    conf_threshold: float = defaults.RASTER_THRESHOLD,
    radius: float | None = None,
) -> GridMap:
    """Cell-wise union of all trusted instances of one frame.

    Instances carrying a score below ``conf_threshold`` are not projected;
    score-less instances (ground truth) always are.
    """
    spec = spec or GridSpec()
    values = np.zeros((spec.height, spec.width))
    for inst in vmap.instances:
        if inst.score is not None and inst.score < conf_threshold:
            continue
        np.maximum(values, rasterize_instance(inst, spec, radius).values, out=values)
    return GridMap(spec, values)
