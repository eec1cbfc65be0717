"""Shared fixtures and strategies of the test suite.

"""
import os

import hypothesis
import hypothesis.strategies as st
import numpy as np
import pytest

from src.database import initialize_database
from src.domain import Network
from src.model.network import make_network

hypothesis.settings.register_profile('fast', max_examples=20, deadline=None)
hypothesis.settings.register_profile('ci', max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.environ.get('HYPOTHESIS_PROFILE', 'fast'))

TOLERANCE = 1e-9
"""Rounding slack of the soundness checks."""


def random_network(seed: int,
                   widths: tuple[int, ...] = (2, 4, 4, 2),
                   bias_scale: float = 0.3) -> Network:
    """Make a ReLU network with Gaussian weights and biases.

    """
    rng = np.random.default_rng(seed)
    weights = [
        rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in))
        for fan_in, fan_out in zip(widths[:-1], widths[1:])
    ]
    biases = [
        rng.normal(0.0, bias_scale, size=fan_out) for fan_out in widths[1:]
    ]
    return make_network(weights, biases)


def ball_samples(x: np.ndarray, epsilon: float, count: int,
                 seed: int) -> np.ndarray:
    """Sample points of the box around x, corners included.

    """
    rng = np.random.default_rng(seed)
    inside = x + rng.uniform(-epsilon, epsilon, size=(count, x.size))
    corners = x + epsilon * rng.choice([-1.0, 1.0], size=(count, x.size))
    return np.vstack([inside, corners])


seeds = st.integers(min_value=0, max_value=2**16)
"""Strategy of network and sample seeds."""

radii = st.floats(min_value=0.0, max_value=0.3)
"""Strategy of ball radii."""


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def small_net() -> Network:
    return random_network(1)


@pytest.fixture
def ledger(tmp_path):
    """Point the certificate ledger at an empty database.

    """
    initialize_database(f'sqlite:///{tmp_path / "ledger.db"}')
    yield
