import numpy as np
import pytest

from wpcn import default_config

# Reference WIT rate table in Mbit/s at alpha=0.05, beta=0.1.
REFERENCE_ANALYTIC = np.array([
    [1.1826, 0.6000, 0.3914, 0.2400],
    [0.8992, 0.8808, 0.3914, 0.2400],
    [0.8992, 0.6000, 0.6644, 0.2400],
    [0.8992, 0.6000, 0.3914, 0.4932],
    [1.0437, 0.7414, 0.5240, 0.3528],
])
REFERENCE_SIMULATION = np.array([
    [1.1740, 0.5309, 0.3669, 0.2036],
    [0.8501, 0.8757, 0.3257, 0.1905],
    [0.8342, 0.5297, 0.6586, 0.2001],
    [0.8308, 0.5308, 0.3395, 0.4577],
    [1.0369, 0.7207, 0.4922, 0.2698],
])


@pytest.fixture
def cfg():
    return default_config()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
