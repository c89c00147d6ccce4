"""
Tests for the trajectory sampler.

Verifies:
- Determinism per seed and independence from the worker count
- Constant paths on the identity walk
- Convergence to the exact path table
- Error paths
"""

import numpy as np
import pytest

from app.core.errors import InvalidParameter, ZeroWeightState
from app.models.walk import WalkSpec
from app.oracle.paths import enumerate_path_distribution
from app.walk.factory import identity_walk, random_walk_spec
from app.walk.oqrw import total_variation
from app.walk.sampler import sample_trajectories


def test_same_seed_same_counts(two_level):
    a = sample_trajectories(two_level, 3, 5000, seed=11, shard_size=700)
    b = sample_trajectories(two_level, 3, 5000, seed=11, shard_size=700)
    assert a.counts == b.counts
    assert sum(a.counts.values()) == 5000


def test_worker_count_does_not_change_counts(two_level):
    one = sample_trajectories(two_level, 3, 4000, seed=5, workers=1, shard_size=500)
    many = sample_trajectories(two_level, 3, 4000, seed=5, workers=8, shard_size=500)
    assert one.counts == many.counts


def test_different_seeds_differ(two_level):
    a = sample_trajectories(two_level, 4, 5000, seed=1)
    b = sample_trajectories(two_level, 4, 5000, seed=2)
    assert a.counts != b.counts


def test_identity_walk_paths_are_constant():
    spec = identity_walk(3, 2)
    result = sample_trajectories(spec, 5, 3000, seed=3)
    assert all(len(set(path)) == 1 for path in result.counts)
    assert all(len(path) == 6 for path in result.counts)


def test_impossible_paths_never_sampled(two_level):
    result = sample_trajectories(two_level, 2, 20000, seed=9)
    # B_2^1 kills the only state ever seen at label 2
    assert not any(path[:2] == ("2", "1") for path in result.counts)


def test_length_zero_draws_starting_labels(two_level):
    result = sample_trajectories(two_level, 0, 20000, seed=4)
    assert set(result.counts) <= {("1",), ("2",)}
    assert result.distribution()[("1",)] == pytest.approx(0.5, abs=0.02)


def test_sampler_tracks_exact_table(two_level):
    exact = enumerate_path_distribution(two_level, 4)
    result = sample_trajectories(two_level, 4, 100_000, seed=7)
    assert total_variation(result.distribution(), exact) < 0.02


@pytest.mark.slow
def test_sampler_million_trajectories(two_level):
    exact = enumerate_path_distribution(two_level, 4)
    result = sample_trajectories(two_level, 4, 1_000_000, seed=2024)
    assert total_variation(result.distribution(), exact) < 0.02


def test_sampler_random_walk_converges(rng):
    spec = random_walk_spec(rng, n_labels=3, dim_internal=2)
    exact = enumerate_path_distribution(spec, 3)
    result = sample_trajectories(spec, 3, 100_000, seed=13)
    assert total_variation(result.distribution(), exact) < 0.03


def test_sampler_errors(two_level):
    with pytest.raises(InvalidParameter):
        sample_trajectories(two_level, 2, 0, seed=0)
    with pytest.raises(InvalidParameter):
        sample_trajectories(two_level, -1, 10, seed=0)


def test_zero_initial_block_is_never_a_start(two_level):
    spec = two_level.with_rho([np.diag([1.0, 0.0]), np.zeros((2, 2))])
    result = sample_trajectories(spec, 1, 1000, seed=0)
    assert all(path[0] == "1" for path in result.counts)


def test_vanishing_jump_weights_raise(two_level):
    transitions = np.array(two_level.transitions)
    transitions[1] = 0.0
    spec = WalkSpec(two_level.labels, transitions, two_level.rho)
    with pytest.raises(ZeroWeightState):
        sample_trajectories(spec, 2, 1000, seed=0)
