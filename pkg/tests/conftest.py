import numpy as np
import pytest

from hdmapkit import Category, PolyInstance, Pose2


def make_instance(points, category=Category.DIVIDER, closed=False, score=None, probs=None):
    return PolyInstance(category, np.asarray(points, dtype=float), closed=closed,
                        score=score, class_probs=probs)


def unit_square(category=Category.PEDESTRIAN_CROSSING):
    return make_instance([[0, 0], [1, 0], [1, 1], [0, 1]], category=category, closed=True)


def random_pose(rng):
    return Pose2(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-np.pi, np.pi))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
