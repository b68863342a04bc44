import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sais import WeightedSample

# randomized property tests must not flake across runs
settings.register_profile(
    "deterministic",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")


def make_batch(pairs, components=None):
    """Build a weighted batch from (x, w) pairs, optionally with components."""
    if components is None:
        return [WeightedSample(float(x), float(w)) for x, w in pairs]
    return [
        WeightedSample(float(x), float(w), int(c))
        for (x, w), c in zip(pairs, components)
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
