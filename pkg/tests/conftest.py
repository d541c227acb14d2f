import numpy as np
import pytest
from hypothesis import settings

from nlshape import Ball, IntervalSet, Params, StarShape2D

settings.register_profile("suite", deadline=None, max_examples=30)
settings.load_profile("suite")


@pytest.fixture
def params_1d():
    return Params(n=1, s=0.5, alpha=0.5, eps=1e-3)


@pytest.fixture
def params_2d():
    return Params(n=2, s=0.5, alpha=0.5, eps=1e-3)


@pytest.fixture
def unit_interval():
    return IntervalSet([(0.0, 1.0)])


@pytest.fixture
def two_intervals():
    return IntervalSet([(0.0, 1.0), (2.0, 3.5)])


@pytest.fixture
def unit_disk():
    return Ball((0.0, 0.0), 1.0)


@pytest.fixture
def unit_area_disk():
    return Ball((0.0, 0.0), 1.0 / np.sqrt(np.pi))


@pytest.fixture
def mode3_star():
    # the reference wobbly shape used across 2D tests: r = 1 + 0.2 cos(3 theta)
    return StarShape2D((0.0, 0.0), 1.0, a=(0.0, 0.0, 0.2))
