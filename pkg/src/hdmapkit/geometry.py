"""Rigid 2D transforms and polyline utilities."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError
from .types import BBox, PolyInstance, Pose2


def transform_points(pose: Pose2, pts) -> np.ndarray:
    """Map points through the rigid transform R(yaw) @ p + (x, y)."""
    pts = np.asarray(pts, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError(f"points must have shape (N, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("points must be finite")
    return pts @ pose.rotation().T + pose.translation()


def compose_poses(a: Pose2, b: Pose2) -> Pose2:
    """Pose of b expressed through a: applying the result equals applying b, then a."""
    tb = a.rotation() @ b.translation() + a.translation()
    return Pose2(tb[0], tb[1], a.yaw + b.yaw)


def invert_pose(p: Pose2) -> Pose2:
    c, s = np.cos(p.yaw), np.sin(p.yaw)
    return Pose2(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.yaw)


def relative_pose(a: Pose2, b: Pose2) -> Pose2:
    """Transform mapping b-frame coordinates into the a frame.

    Both poses are expressed in a common (world) frame;
    ``relative_pose(a, a)`` is the identity.
    """
    c, s = np.cos(a.yaw), np.sin(a.yaw)
    dx, dy = b.x - a.x, b.y - a.y
    return Pose2(c * dx + s * dy, -s * dx + c * dy, b.yaw - a.yaw)


def _segment_lengths(pts: np.ndarray, closed: bool) -> np.ndarray:
    nxt = np.roll(pts, -1, axis=0) if closed else pts[1:]
    cur = pts if closed else pts[:-1]
    return np.linalg.norm(nxt - cur, axis=1)


def polyline_length(inst: PolyInstance) -> float:
    """Total arc length, including the implicit closing edge for polygons."""
    return float(_segment_lengths(inst.points, inst.closed).sum())


def resample_polyline(inst: PolyInstance, n: int) -> np.ndarray:
    """Resample to n points at equal arc-length spacing.

    Open polylines keep both endpoints exactly; closed ones start at the
    first vertex and distribute n points over the full perimeter.
    """
    if n < 2:
        raise InvalidInputError("resampling needs n >= 2")
    pts = inst.points
    seg_len = _segment_lengths(pts, inst.closed)
    total = float(seg_len.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateGeometryError("polyline has zero arc length")

    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    if inst.closed:
        targets = total * np.arange(n) / n
        starts = pts
        ends = np.roll(pts, -1, axis=0)
    else:
        targets = np.linspace(0.0, total, n)
        starts = pts[:-1]
        ends = pts[1:]

    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(seg_len) - 1)
    denom = seg_len[idx]
    frac = np.where(denom > 0, (targets - cum[idx]) / np.where(denom > 0, denom, 1.0), 0.0)
    out = starts[idx] + frac[:, None] * (ends[idx] - starts[idx])
    if not inst.closed:
        out[0] = pts[0]
        out[-1] = pts[-1]
    return out


def bbox_of(inst: PolyInstance) -> BBox:
    """Axis-aligned bounding box of the instance's point set."""
    lo = inst.points.min(axis=0)
    hi = inst.points.max(axis=0)
    return BBox(center=(lo + hi) / 2.0, half_extents=(hi - lo) / 2.0)
