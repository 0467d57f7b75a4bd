"""Domain types: poses, map instances, grids, embeddings, and configuration.

All types are immutable after construction (arrays are marked read-only), so
instances can be shared freely between threads and functions stay pure.

Coordinate conventions used throughout the package:

* ego frame: x forward, y left, yaw counter-clockwise (radians);
* grids: column index runs along x, row index along y, cell (row=0, col=0)
  anchors the (x_min, y_min) corner; ``GridMap.values`` has shape
  (height, width).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np

from .errors import InvalidConfigError, InvalidInputError


class Category(str, Enum):
    DIVIDER = "divider"
    PEDESTRIAN_CROSSING = "pedestrian_crossing"
    BOUNDARY = "boundary"


#: Fixed category order used for probability vectors and per-class reductions.
CATEGORIES = (Category.DIVIDER, Category.PEDESTRIAN_CROSSING, Category.BOUNDARY)


def _require_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} must be finite")


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def wrap_angle(yaw: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(yaw, math.tau)
    if wrapped <= -math.pi:
        wrapped += math.tau
    return wrapped


@dataclass(frozen=True)
class Pose2:
    """Planar rigid pose: translation (x, y) in meters plus yaw in radians."""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.yaw)):
            raise InvalidInputError("pose components must be finite")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[c, -s], [s, c]])

    def translation(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True, eq=False)
class BBox:
    """Axis-aligned box as center plus nonnegative half extents."""

    center: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        center = _frozen_array(self.center)
        half = _frozen_array(self.half_extents)
        _require_finite(center, "bbox center")
        _require_finite(half, "bbox half extents")
        if np.any(half < 0):
            raise InvalidInputError("bbox half extents must be >= 0")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_extents", half)

    def intersects(self, x_min: float, x_max: float, y_min: float, y_max: float) -> bool:
        lo = self.center - self.half_extents
        hi = self.center + self.half_extents
        return bool(hi[0] >= x_min and lo[0] <= x_max and hi[1] >= y_min and lo[1] <= y_max)


@dataclass(frozen=True, eq=False)
class PolyInstance:
    """One map element: an ordered 2D point sequence in the ego frame.

    ``closed`` marks polygons; the closing edge is implicit and the first
    point must not be repeated at the end. ``score`` is the detection
    confidence (absent for ground truth). ``class_probs`` optionally carries
    the per-category probabilities of a prediction.
    """

    category: Category
    points: np.ndarray
    closed: bool = False
    score: float | None = None
    class_probs: Mapping[Category, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "category", Category(self.category))
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidInputError(f"points must have shape (N, 2), got {pts.shape}")
        if pts.shape[0] < 2:
            raise InvalidInputError("an instance needs at least 2 points")
        _require_finite(pts, "instance points")
        if self.closed and bool(np.all(pts[0] == pts[-1])):
            raise InvalidInputError("closed instances must not duplicate the first point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.score is not None:
            s = float(self.score)
            if not (math.isfinite(s) and 0.0 <= s <= 1.0):
                raise InvalidInputError(f"score must be in [0, 1], got {self.score}")
            object.__setattr__(self, "score", s)
        if self.class_probs is not None:
            probs = {Category(k): float(v) for k, v in self.class_probs.items()}
            object.__setattr__(self, "class_probs", probs)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class LocalVectorMap:
    """All instances perceived in one frame plus the world-frame ego pose."""

    frame_id: int
    timestamp: float
    ego_pose: Pose2
    instances: tuple[PolyInstance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))


@dataclass(frozen=True)
class GridSpec:
    """Geometry of an occupancy grid.

    The extent is derived from the anchor corner so width * resolution always
    equals x_max - x_min exactly.
    """

    width: int = 400
    height: int = 200
    resolution: float = 0.15
    x_min: float = -30.0
    y_min: float = -15.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidConfigError("grid dimensions must be positive")
        if not (math.isfinite(self.resolution) and self.resolution > 0):
            raise InvalidConfigError("grid resolution must be positive")
        if not (math.isfinite(self.x_min) and math.isfinite(self.y_min)):
            raise InvalidConfigError("grid anchor must be finite")

    @property
    def x_max(self) -> float:
        return self.x_min + self.width * self.resolution

    @property
    def y_max(self) -> float:
        return self.y_min + self.height * self.resolution

    @property
    def extent(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.y_min, self.y_max)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, y) center coordinates as 1D arrays of length width / height."""
        xs = self.x_min + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.y_min + (np.arange(self.height) + 0.5) * self.resolution
        return xs, ys


@dataclass(frozen=True, eq=False)
class GridMap:
    """Occupancy field over a :class:`GridSpec`; values in [0, 1], shape (H, W)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.spec.height, self.spec.width):
            raise InvalidInputError(
                f"grid values must have shape {(self.spec.height, self.spec.width)}, "
                f"got {values.shape}"
            )
        _require_finite(values, "grid values")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise InvalidInputError("grid values must lie in [0, 1]")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridMap":
        return cls(spec, np.zeros((spec.height, spec.width)))

    @property
    def width(self) -> int:
        return self.spec.width

    @property
    def height(self) -> int:
        return self.spec.height

    @property
    def resolution(self) -> float:
        return self.spec.resolution


@dataclass(frozen=True, eq=False)
class InstanceEmbedding:
    """Aggregated instance feature vector used by the contrastive stage."""

    feature: np.ndarray
    category: Category
    score: float
    bbox: BBox

    def __post_init__(self):
        object.__setattr__(self, "category", Category(self.category))
        feat = _frozen_array(self.feature)
        if feat.ndim != 1:
            raise InvalidInputError("embedding feature must be a 1D vector")
        _require_finite(feat, "embedding feature")
        object.__setattr__(self, "feature", feat)
        s = float(self.score)
        if not (math.isfinite(s) and 0.0 <= s <= 1.0):
            raise InvalidInputError(f"embedding score must be in [0, 1], got {self.score}")
        object.__setattr__(self, "score", s)


@dataclass(frozen=True)
class LossWeights:
    """Weights of the combined loss, keyed by the term they scale."""

    cls: float = 2.0
    pts: float = 5.0
    dirs: float = 0.005
    cst: float = 0.1
    ol: float = 1.0
    var: float = 1.0
    dist: float = 0.1

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if not math.isfinite(value) or value < 0:
                raise InvalidConfigError(f"loss weight {name!r} must be finite and >= 0")

    def as_dict(self) -> dict[str, float]:
        return {
            "cls": self.cls,
            "pts": self.pts,
            "dirs": self.dirs,
            "cst": self.cst,
            "ol": self.ol,
            "var": self.var,
            "dist": self.dist,
        }


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation settings: CD thresholds, perception range, resampling density."""

    cd_thresholds: tuple[float, ...] = (0.5, 1.0, 1.5)
    range_x: float = 60.0
    range_y: float = 30.0
    resample_n: int = 100

    def __post_init__(self):
        thresholds = tuple(float(t) for t in self.cd_thresholds)
        if not thresholds or any(t <= 0 for t in thresholds):
            raise InvalidConfigError("cd_thresholds must be positive")
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise InvalidConfigError("cd_thresholds must be strictly increasing")
        if self.range_x <= 0 or self.range_y <= 0:
            raise InvalidConfigError("perception range must be positive")
        if self.resample_n < 2:
            raise InvalidConfigError("resample_n must be >= 2")
        object.__setattr__(self, "cd_thresholds", thresholds)


class Diagnostics:
    """Caller-owned counter bag for non-fatal numeric events.

    Operations that clamp, skip, or zero out pieces of their input record the
    event here when a Diagnostics instance is passed in; the core math stays
    pure and never mutates shared state behind the caller's back.
    """

    def __init__(self):
        self.counts: dict[str, int] = {}

    def count(self, name: str, n: int = 1) -> None:
        if n:
            self.counts[name] = self.counts.get(name, 0) + int(n)

    def get(self, name: str) -> int:
        return self.counts.get(name, 0)

    def __repr__(self):
        return f"Diagnostics({self.counts})"
