"""Deterministic synthetic scenes: static world layouts observed from a
moving ego, perturbed predictions, and clustered instance embeddings.

Randomness comes from the counter-based Philox generator keyed by the scene
seed; per-frame streams are derived through numpy's SeedSequence spawn keys,
so frames can be generated independently and the whole scene reproduces
bit-exactly for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError, InvalidInputError
from .geometry import bbox_of, invert_pose, transform_points
from .types import CATEGORIES, Category, InstanceEmbedding, LocalVectorMap, PolyInstance, Pose2

_FRAME_DT = 0.5  # seconds between frames


@dataclass(frozen=True)
class SceneConfig:
    seed: int = 0
    n_frames: int = 5
    n_dividers: tuple[int, int] = (2, 4)
    n_crossings: tuple[int, int] = (1, 3)
    n_boundaries: tuple[int, int] = (2, 2)
    # prediction noise
    point_sigma: float = 0.0
    drop_prob: float = 0.0
    fp_rate: float = 0.0
    score_sigma: float = 0.0
    class_prob_correct: float = 0.9
    # ego motion
    step: float = 1.5           # meters per frame
    yaw_rate: float = 0.0       # radians per frame
    # perception range (full widths)
    range_x: float = 60.0
    range_y: float = 30.0

    def __post_init__(self):
        if self.n_frames < 1:
            raise InvalidConfigError("n_frames must be >= 1")
        for name in ("n_dividers", "n_crossings", "n_boundaries"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise InvalidConfigError(f"{name} range must satisfy 0 <= lo <= hi")
        for name in ("point_sigma", "score_sigma", "fp_rate"):
            if getattr(self, name) < 0:
                raise InvalidConfigError(f"{name} must be >= 0")
        for name in ("drop_prob", "class_prob_correct"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidConfigError(f"{name} must be in [0, 1]")
        if self.range_x <= 0 or self.range_y <= 0:
            raise InvalidConfigError("perception range must be positive")


def _rng(cfg_seed: int, stream: int, frame: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(cfg_seed), spawn_key=(stream, frame))
    return np.random.Generator(np.random.Philox(seq))


def _trajectory(cfg: SceneConfig) -> list[Pose2]:
    path = abs(cfg.step) * (cfg.n_frames - 1)
    poses = []
    x, y, yaw = -path / 2.0, 0.0, 0.0
    for _ in range(cfg.n_frames):
        poses.append(Pose2(x, y, yaw))
        x += cfg.step * math.cos(yaw)
        y += cfg.step * math.sin(yaw)
        yaw += cfg.yaw_rate
    return poses


def _layout_bounds(cfg: SceneConfig) -> tuple[float, float]:
    # inner box that stays inside every frame's perception rectangle
    path = abs(cfg.step) * (cfg.n_frames - 1)
    total_yaw = abs(cfg.yaw_rate) * (cfg.n_frames - 1)
    swing = math.sin(min(math.pi / 2, total_yaw)) * (cfg.range_x + cfg.range_y) / 4.0
    half_x = cfg.range_x / 2.0 - path / 2.0 - swing - 1.0
    half_y = cfg.range_y / 2.0 - min(path / 2.0, 4.0) - swing - 1.0
    if half_x < 4.0 or half_y < 3.0:
        raise InvalidConfigError(
            "ego motion leaves no usable layout area inside the perception range"
        )
    return half_x, half_y


def _world_layout(cfg: SceneConfig, half_x: float, half_y: float) -> list[PolyInstance]:
    rng = _rng(cfg.seed, stream=0)
    instances: list[PolyInstance] = []

    def wavy_line(y0: float, n_pts: int = 9) -> np.ndarray:
        xs = np.linspace(-half_x, half_x, n_pts)
        amp = rng.uniform(0.0, 0.4)
        wavelength = rng.uniform(20.0, 40.0)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        ys = y0 + amp * np.sin(2.0 * math.pi * xs / wavelength + phase)
        return np.column_stack([xs, ys])

    n_div = int(rng.integers(cfg.n_dividers[0], cfg.n_dividers[1] + 1))
    inner = 0.55 * half_y
    div_ys = np.linspace(-inner, inner, n_div) if n_div > 1 else np.array([0.0])[:n_div]
    for y0 in div_ys:
        instances.append(PolyInstance(Category.DIVIDER, wavy_line(float(y0))))

    n_bnd = int(rng.integers(cfg.n_boundaries[0], cfg.n_boundaries[1] + 1))
    for k in range(n_bnd):
        side = 1.0 if k % 2 == 0 else -1.0
        instances.append(PolyInstance(Category.BOUNDARY, wavy_line(side * 0.85 * half_y)))

    n_cross = int(rng.integers(cfg.n_crossings[0], cfg.n_crossings[1] + 1))
    for _ in range(n_cross):
        cx = rng.uniform(-half_x + 3.0, half_x - 3.0)
        cy = rng.uniform(-0.3 * half_y, 0.3 * half_y)
        hx = rng.uniform(1.0, 2.0)
        hy = rng.uniform(2.0, min(3.5, 0.45 * half_y))
        corners = np.array(
            [[cx - hx, cy - hy], [cx + hx, cy - hy], [cx + hx, cy + hy], [cx - hx, cy + hy]]
        )
        instances.append(PolyInstance(Category.PEDESTRIAN_CROSSING, corners, closed=True))

    return instances


def generate_scene(cfg: SceneConfig) -> list[LocalVectorMap]:
    """Ground-truth frames: one static layout seen along a smooth trajectory."""
    poses = _trajectory(cfg)
    half_x, half_y = _layout_bounds(cfg)
    layout = _world_layout(cfg, half_x, half_y)
    frames = []
    for t, pose in enumerate(poses):
        to_ego = invert_pose(pose)
        instances = [
            PolyInstance(
                inst.category,
                transform_points(to_ego, inst.points),
                closed=inst.closed,
            )
            for inst in layout
        ]
        frames.append(
            LocalVectorMap(
                frame_id=t, timestamp=t * _FRAME_DT, ego_pose=pose, instances=instances
            )
        )
    return frames


def _class_probs(cfg: SceneConfig, category: Category) -> dict[Category, float]:
    rest = (1.0 - cfg.class_prob_correct) / (len(CATEGORIES) - 1)
    return {c: (cfg.class_prob_correct if c == category else rest) for c in CATEGORIES}


def _false_positive(cfg: SceneConfig, rng: np.random.Generator) -> PolyInstance:
    start = np.array(
        [
            rng.uniform(-0.4 * cfg.range_x, 0.4 * cfg.range_x),
            rng.uniform(-0.4 * cfg.range_y, 0.4 * cfg.range_y),
        ]
    )
    heading = rng.uniform(0.0, 2.0 * math.pi)
    length = rng.uniform(2.0, 8.0)
    direction = np.array([math.cos(heading), math.sin(heading)])
    ts = np.linspace(0.0, length, 4)
    category = CATEGORIES[int(rng.integers(0, len(CATEGORIES)))]
    return PolyInstance(
        category,
        start + ts[:, None] * direction,
        score=float(rng.uniform(0.3, 0.9)),
        class_probs=_class_probs(cfg, category),
    )


def simulate_predictions(gt: LocalVectorMap, cfg: SceneConfig) -> LocalVectorMap:
    """Noisy detections for one ground-truth frame, deterministic in the seed.

    Points get i.i.d. Gaussian jitter, instances drop out with ``drop_prob``,
    Poisson-many false positives are injected at ``fp_rate`` per true
    instance, and scores are 1 minus half-normal noise.
    """
    rng = _rng(cfg.seed, stream=1, frame=gt.frame_id)
    instances = []
    for inst in gt.instances:
        if rng.random() < cfg.drop_prob:
            continue
        jitter = rng.normal(0.0, cfg.point_sigma, size=inst.points.shape)
        score = float(np.clip(1.0 - cfg.score_sigma * abs(rng.normal()), 0.0, 1.0))
        instances.append(
            PolyInstance(
                inst.category,
                inst.points + jitter,
                closed=inst.closed,
                score=score,
                class_probs=_class_probs(cfg, inst.category),
            )
        )
    n_fp = int(rng.poisson(cfg.fp_rate * max(1, len(gt.instances))))
    for _ in range(n_fp):
        instances.append(_false_positive(cfg, rng))
    return LocalVectorMap(
        frame_id=gt.frame_id,
        timestamp=gt.timestamp,
        ego_pose=gt.ego_pose,
        instances=instances,
    )


def generate_embeddings(
    vmap: LocalVectorMap,
    dim: int,
    separation: float = 10.0,
    sigma: float = 0.5,
    seed: int = 0,
) -> list[InstanceEmbedding]:
    """Category-clustered Gaussian embeddings with the given mean separation.

    Category centroids sit on a circle in the first two dimensions whose
    radius makes every pairwise centroid distance equal ``separation``.
    """
    if dim < 2:
        raise InvalidInputError("embedding dimension must be >= 2")
    rng = _rng(seed, stream=2, frame=vmap.frame_id)
    radius = separation / math.sqrt(3.0)
    centroids = {}
    for i, cat in enumerate(CATEGORIES):
        angle = 2.0 * math.pi * i / len(CATEGORIES)
        mu = np.zeros(dim)
        mu[0] = radius * math.cos(angle)
        mu[1] = radius * math.sin(angle)
        centroids[cat] = mu
    out = []
    for inst in vmap.instances:
        feature = centroids[inst.category] + rng.normal(0.0, sigma, size=dim)
        out.append(
            InstanceEmbedding(
                feature=feature,
                category=inst.category,
                score=1.0 if inst.score is None else inst.score,
                bbox=bbox_of(inst),
            )
        )
    return out
