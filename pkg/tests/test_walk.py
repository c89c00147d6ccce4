"""
Tests for the open quantum random walk.

Verifies:
- Walk validation reports (pass, normalization failure, unitary single label)
- One-step channel against the dense lifted-jump map
- Trace preservation and positivity over many steps
- Path probabilities and their marginal consistency
- The JSON walk document
"""

import json
from itertools import product

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from app.core.errors import DimensionMismatch, InvalidParameter, UnknownLabel
from app.linalg.operators import identity, min_eigenvalue
from app.models.walk import WalkDocument, WalkSpec
from app.walk.factory import identity_walk
from app.walk.oqrw import (
    blocks_to_state,
    channel_step,
    dense_channel,
    evolve,
    lifted_jumps,
    path_probability,
    state_to_blocks,
    total_variation,
    validate,
)


def test_two_level_model_validates(two_level):
    report = validate(two_level)
    assert report.passed
    assert report.failures == []
    assert max(report.normalization_residuals.values()) < 1e-12
    assert report.total_trace_residual < 1e-12


def test_validate_reports_scaled_transition(two_level):
    transitions = np.array(two_level.transitions)
    transitions[0, 0] *= 2
    broken = WalkSpec(two_level.labels, transitions, two_level.rho)
    report = validate(broken)
    assert not report.passed
    # Σ_i B_1^i† B_1^i − I = diag(3|a|², 3|b|²)
    assert report.normalization_residuals["1"] == pytest.approx(3 * 0.8 ** 2)
    assert report.normalization_residuals["2"] < 1e-12
    assert len(report.failures) == 1


def test_validate_single_unitary_label():
    theta = 0.3
    u = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    spec = WalkSpec(("1",), u[None, None], np.diag([0.5, 0.5])[None])
    assert validate(spec).passed


def test_validate_flags_bad_blocks_and_omega0(two_level):
    spec = two_level.with_rho([np.diag([0.5, 0.0]), np.zeros((2, 2))]).with_omega0(np.diag([1.0, 0, 0, 0.5]))
    report = validate(spec)
    assert not report.passed
    assert report.block_traces["2"] == 0.0
    assert report.total_trace_residual == pytest.approx(0.5)
    assert report.omega0_residual == pytest.approx(0.5)
    assert len(report.failures) == 3


def test_lifted_jumps_resolve_identity(random_specs):
    for spec in random_specs:
        total = sum(j.operator.conj().T @ j.operator for j in lifted_jumps(spec))
        assert_allclose(total, identity(spec.site_dim), atol=1e-10)


def test_channel_step_worked_value(two_level):
    out = channel_step(two_level, two_level.rho)
    assert_allclose(out[0], np.diag([0.18, 0.0]), atol=1e-12)
    assert_allclose(out[1], np.diag([0.82, 0.0]), atol=1e-12)


def test_identity_walk_is_stationary():
    spec = identity_walk(3, 2)
    assert_allclose(channel_step(spec, spec.rho), spec.rho)


def test_channel_step_matches_dense_map(random_specs):
    for spec in random_specs:
        blocks = channel_step(spec, spec.rho)
        dense = dense_channel(spec, blocks_to_state(spec.rho))
        assert_allclose(blocks, state_to_blocks(spec, dense), atol=1e-11)
        assert_allclose(blocks_to_state(blocks), dense, atol=1e-11)


def test_channel_is_trace_preserving_and_positive(random_specs):
    for spec in random_specs[:10]:
        history = evolve(spec, 50)
        assert len(history) == 51
        traces = [np.real(np.einsum("iaa->", h)) for h in history]
        assert_allclose(np.diff(traces), 0.0, atol=1e-12)
        assert traces[-1] == pytest.approx(1.0, abs=1e-10)
        assert min(min_eigenvalue(b) for b in history[-1]) >= -1e-10


def test_channel_step_rejects_wrong_shape(two_level):
    with pytest.raises(DimensionMismatch):
        channel_step(two_level, np.zeros((3, 2, 2)))
    with pytest.raises(InvalidParameter):
        evolve(two_level, -1)


def test_path_probability_worked_values(two_level):
    assert path_probability(two_level, ["1"]) == pytest.approx(0.5)
    assert path_probability(two_level, ["1", "1"]) == pytest.approx(0.18)
    assert path_probability(two_level, ["1", "2"]) == pytest.approx(0.32)
    assert path_probability(two_level, ["2", "1"]) == pytest.approx(0.0)
    assert path_probability(two_level, ["2", "2"]) == pytest.approx(0.5)


def test_path_probability_errors(two_level):
    with pytest.raises(UnknownLabel):
        path_probability(two_level, ["1", "3"])
    with pytest.raises(InvalidParameter):
        path_probability(two_level, [])


def test_path_probabilities_marginalize(random_specs):
    for spec in random_specs[:10]:
        labels = spec.labels
        for n in range(4):
            for path in product(labels, repeat=n + 1):
                extended = sum(path_probability(spec, path + (i,)) for i in labels)
                assert extended == pytest.approx(path_probability(spec, path), abs=1e-12)
                assert path_probability(spec, path) >= -1e-12


def test_total_variation():
    assert total_variation({("1",): 1.0}, {("2",): 1.0}) == pytest.approx(1.0)
    assert total_variation({("1",): 0.5, ("2",): 0.5}, {("1",): 0.5, ("2",): 0.5}) == 0.0


def test_walk_document_round_trip(two_level):
    doc = WalkDocument.from_spec(two_level.with_omega0(np.eye(4) / 4))
    spec = WalkDocument.model_validate(json.loads(doc.model_dump_json())).to_spec()
    assert spec.labels == two_level.labels
    assert_allclose(spec.transitions, two_level.transitions)
    assert_allclose(spec.rho, two_level.rho)
    assert_allclose(spec.omega0, np.eye(4) / 4)


def test_walk_document_rejects_unknown_fields_and_labels():
    base = {"labels": [1, 2], "dim_internal": 1, "B": {"1": {"2": [[1]]}, "2": {"2": [[1]]}}, "rho": {"1": [[0.5]], "2": [[0.5]]}}
    assert WalkDocument.model_validate(base).labels == ["1", "2"]
    with pytest.raises(ValidationError):
        WalkDocument.model_validate({**base, "extra": 1})
    with pytest.raises(ValidationError):
        WalkDocument.model_validate({**base, "B": {"3": {"1": [[1]]}}})
    with pytest.raises(ValidationError):
        WalkDocument.model_validate({**base, "rho": {"1": [[1]]}})
    with pytest.raises(ValidationError):
        WalkDocument.model_validate({**base, "tolerances": {"nonsense": 1.0}})


def test_walk_spec_arrays_are_read_only(two_level):
    with pytest.raises(ValueError):
        two_level.transitions[0, 0, 0, 0] = 5.0
