"""
Shared fixtures: a seeded generator, the two-level worked model and random
valid walks and projections.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.walk.factory import random_projection, random_walk_spec, two_level_model


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_level():
    """a = 0.6, b = 0.8, c = 0.8, d = 0.6 with ρ_1 = ρ_2 = diag(1/2, 0)."""
    return two_level_model(0.6, 0.8, 0.8, 0.6)


@pytest.fixture(scope="session")
def random_specs():
    """200 random walks over |Λ| ≤ 3, dim H ≤ 3 and k ∈ {1, 2}."""
    rng = np.random.default_rng(20240612)
    specs = []
    for _ in range(200):
        n = int(rng.integers(1, 4))
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, 3))
        specs.append(random_walk_spec(rng, n_labels=n, dim_internal=d, k=k, with_omega0=True))
    return specs


@pytest.fixture
def small_specs(rng):
    """Walks small enough for the dense oracle: site dimension 2 or 4."""
    shapes = [(2, 1), (1, 2), (2, 2)]
    return [random_walk_spec(rng, n_labels=n, dim_internal=d, k=1, with_omega0=True) for n, d in shapes for _ in range(4)]


@pytest.fixture
def make_projection(rng):
    def _make(dim, rank=None):
        return random_projection(rng, dim, rank)

    return _make
