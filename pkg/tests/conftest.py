import numpy as np
import pytest

from overlap_ifs import IfsSystem, ProbabilityVector, SimilarityMap

GOLDEN_RATIO_FRAC = 0.6180339887498949


def quasi_random_points(interval, count):
    """Additive golden-ratio sequence across the interval (deterministic)."""
    i = np.arange(1, count + 1)
    frac = (i * GOLDEN_RATIO_FRAC) % 1.0
    return interval.lo + frac * interval.diam


@pytest.fixture
def uniform2():
    return ProbabilityVector.uniform(2)


@pytest.fixture
def bc60():
    return IfsSystem.bernoulli_convolution(0.6)


@pytest.fixture
def bc75():
    return IfsSystem.bernoulli_convolution(0.75)


@pytest.fixture
def disjoint40():
    return IfsSystem.bernoulli_convolution(0.4)


@pytest.fixture
def duplicate_maps():
    return IfsSystem.from_maps([SimilarityMap(0.5, 1.0), SimilarityMap(0.5, 1.0)])
