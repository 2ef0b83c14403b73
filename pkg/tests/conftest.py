import numpy as np
import pytest

from zenosim import SpaceConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_space():
    return SpaceConfig(n_max=10)


@pytest.fixture
def tiny_space():
    return SpaceConfig(n_max=4)
