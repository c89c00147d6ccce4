"""
Tests for stopping times and recurrence decisions.

Verifies:
- Stopping-time observables and the truncation identity
- Tail conditional: closed form vs explicit observables, decay bound
- Worked verdicts on the two-level model
- Ray independence, sufficient/exact consistency, E ⇒ φ direction
- Complete accessibility and batch verdicts
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.core.config import Tolerances
from app.core.errors import DegenerateProjection, InvalidParameter, NotAProjection
from app.linalg.operators import complement, decode_matrix, identity, op_norm, rank1_projection
from app.models.reports import Access, Criterion, Level, Verdict
from app.qmc.functionals import psi_vector
from app.qmc.state import conditional_expectation_root
from app.recurrence.decide import (
    decide_E_complete_accessibility,
    decide_E_recurrence,
    decide_many_E_recurrence,
    decide_phi_complete_accessibility,
    decide_phi_recurrence,
)
from app.recurrence.stopping import StoppingTime, stopping_time, tail_conditional
from app.tree.geometry import Ray, TreeShape
from app.walk.factory import identity_walk, random_density, two_level_model

P = np.diag([1.0, 0.0]).astype(complex)
Q = np.diag([0.0, 1.0]).astype(complex)
POS1 = np.diag([1.0, 0.0]).astype(complex)
POS2 = np.diag([0.0, 1.0]).astype(complex)


@pytest.fixture
def optimal():
    """|a| = 1, c = 0, b = 0.6, d = 0.8."""
    return two_level_model(1.0, 0.6, 0.0, 0.8)


def _nonzero_projection(rng, make_projection, dim):
    return make_projection(dim, int(rng.integers(1, dim + 1)))


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Stopping times
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def test_first_stopping_time_is_e_at_root():
    e = np.kron(P, POS1)
    obs = stopping_time(e, Ray(), 0)
    assert obs.support == [()]
    assert_allclose(obs.at(()), e)


def test_stopping_time_layout():
    e = np.kron(P, POS1)
    ray = Ray(prefix=(2,), period=(1,))
    tau = StoppingTime(e, ray)
    assert tau.hit(2).support == [(), (2,), (2, 1)]
    assert_allclose(tau.hit(2).at((2,)), complement(e))
    assert_allclose(tau.hit(2).at((2, 1)), e)
    assert tau.tail(2).support == [(), (2,), (2, 1)]
    assert_allclose(tau.tail(2).at((2, 1)), complement(e))


def test_identity_projection_never_waits():
    tau = StoppingTime(identity(4))
    assert op_norm(tau.hit(3).at(())) == 0.0
    assert op_norm(tau.tail(0).at(())) == 0.0


def test_stopping_time_rejects_bad_input():
    with pytest.raises(NotAProjection):
        StoppingTime(np.diag([0.5, 1.0]))
    with pytest.raises(InvalidParameter):
        StoppingTime(identity(2)).hit(-1)


def test_truncation_is_identity_as_dense_operator(make_projection):
    e = make_projection(2, 1)
    tau = StoppingTime(e, Ray(period=(1, 2)))
    for n in range(5):
        vertices = Ray(period=(1, 2)).vertices(n)
        assert_allclose(tau.truncation(n).dense(vertices), identity(2 ** (n + 1)), atol=1e-12)


def test_truncation_identity_under_conditional_expectation(random_specs, rng, make_projection):
    for spec in random_specs[:15]:
        e = make_projection(spec.site_dim)
        ray = Ray.random(TreeShape(spec.k), rng)
        tau = StoppingTime(e, ray)
        for n in range(13):
            assert_allclose(conditional_expectation_root(spec, tau.truncation(n)), identity(spec.site_dim), atol=1e-11)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Tail conditional
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def test_tail_conditional_matches_explicit_observable(random_specs, rng, make_projection):
    for spec in random_specs[:15]:
        e = make_projection(spec.site_dim)
        ray = Ray.random(TreeShape(spec.k), rng)
        for n in (0, 1, 4):
            explicit = conditional_expectation_root(spec, StoppingTime(e, ray).tail(n))
            assert_allclose(tail_conditional(spec, e, n), explicit, atol=1e-12)


def test_tail_decays_geometrically(random_specs, make_projection):
    for spec in random_specs:
        e = make_projection(spec.site_dim)
        p = float(np.max(psi_vector(spec, complement(e)).real))
        for n in range(21):
            assert op_norm(tail_conditional(spec, e, n)) <= p ** n + 1e-12


def test_tail_of_identity_vanishes(two_level):
    for n in range(4):
        assert op_norm(tail_conditional(two_level, identity(4), n)) == 0.0


def test_recurrent_case_tail_bound(two_level):
    e = complement(np.kron(rank1_projection(0.5, 1.0), POS1))
    for n in range(10):
        assert op_norm(tail_conditional(two_level, e, n)) <= 0.18 ** n + 1e-12


def test_non_recurrent_case_tail_is_constant(optimal):
    e = complement(np.kron(P, POS1))
    for n in range(1, 8):
        assert_allclose(tail_conditional(optimal, e, n), np.kron(P, POS1), atol=1e-12)


def test_tail_conditional_rejects_negative_steps(two_level):
    with pytest.raises(InvalidParameter):
        tail_conditional(two_level, identity(4), -1)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Recurrence verdicts
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def test_sufficient_bound_verdict(two_level):
    e = complement(np.kron(rank1_projection(0.5, 1.0), POS1))
    report = decide_E_recurrence(two_level, e)
    assert report.level == Level.E
    assert report.verdict == Verdict.RECURRENT
    assert report.criterion == Criterion.SUFFICIENT_BOUND
    assert report.bound_p == pytest.approx(0.18)
    assert report.psi == pytest.approx({"1": 0.18, "2": 0.0})
    assert report.saturated_labels == []
    assert report.residual_norm <= 1e-12
    assert report.ray_consistency_residual <= 1e-12


def test_non_recurrent_verdict(optimal):
    e = complement(np.kron(P, POS1))
    report = decide_E_recurrence(optimal, e)
    assert report.verdict == Verdict.NOT_RECURRENT
    assert report.criterion == Criterion.EXACT_TAIL_LIMIT
    assert report.bound_p == pytest.approx(1.0)
    assert report.saturated_labels == ["1"]
    assert_allclose(decode_matrix(report.tail_limit), np.kron(P, POS1), atol=1e-12)
    assert_allclose(decode_matrix(report.residual_operator), np.kron(Q, POS1), atol=1e-12)
    assert report.residual_norm == pytest.approx(1.0)


def test_identity_is_trivially_recurrent(two_level):
    report = decide_E_recurrence(two_level, identity(4))
    assert report.verdict == Verdict.RECURRENT
    assert report.bound_p == 0.0
    assert report.normalizer == pytest.approx(4.0)


def test_exact_tail_limit_can_be_recurrent():
    spec = identity_walk(2, 2)
    e = np.kron(identity(2), POS2)
    report = decide_E_recurrence(spec, e)
    assert report.criterion == Criterion.EXACT_TAIL_LIMIT
    assert report.saturated_labels == ["1"]
    assert report.verdict == Verdict.RECURRENT


def test_inconclusive_band(optimal):
    e = complement(np.kron(P, POS1))
    loose = Tolerances(zero_tol=0.5, inconclusive_factor=10)
    assert decide_E_recurrence(optimal, e, tolerances=loose).verdict == Verdict.INCONCLUSIVE


def test_zero_projection_is_degenerate(two_level):
    with pytest.raises(DegenerateProjection):
        decide_E_recurrence(two_level, np.zeros((4, 4)))


def test_phi_verdicts_and_faithfulness_gap(optimal):
    e = complement(np.kron(P, POS1))
    faithful = decide_phi_recurrence(optimal, e, identity(4) / 4)
    assert faithful.level == Level.PHI
    assert faithful.verdict == Verdict.NOT_RECURRENT
    assert faithful.value == pytest.approx(0.25)
    blind = decide_phi_recurrence(optimal, e, np.kron(P, identity(2)) / 2)
    assert blind.verdict == Verdict.RECURRENT
    assert blind.value <= 1e-12
    assert decide_E_recurrence(optimal, e).verdict == Verdict.NOT_RECURRENT


def test_phi_degenerate_projection(optimal):
    e = np.kron(P, POS1)
    # Tr(ω T(e)) = Tr(ω (P ⊗ |1⟩⟨1| + Q ⊗ |2⟩⟨2|)), blind to ω supported on Q ⊗ |1⟩⟨1|
    with pytest.raises(DegenerateProjection):
        decide_phi_recurrence(optimal, e, np.kron(Q, POS1))


def test_verdicts_are_ray_independent(random_specs, rng, make_projection):
    for spec in random_specs[:15]:
        e = _nonzero_projection(rng, make_projection, spec.site_dim)
        reports = [decide_E_recurrence(spec, e, ray=Ray.random(TreeShape(spec.k), rng)) for _ in range(5)]
        assert len({r.verdict for r in reports}) == 1
        assert all(r.ray_consistency_residual <= 1e-11 for r in reports)


def test_sufficient_bound_never_contradicts_exact_limit(random_specs, rng, make_projection):
    for spec in random_specs:
        e = _nonzero_projection(rng, make_projection, spec.site_dim)
        report = decide_E_recurrence(spec, e)
        if report.criterion == Criterion.SUFFICIENT_BOUND:
            assert report.residual_norm <= 1e-9


def test_E_recurrence_implies_phi_recurrence(random_specs, rng, make_projection):
    recurrent = 0
    for spec in random_specs[:100]:
        e = _nonzero_projection(rng, make_projection, spec.site_dim)
        omega = random_density(rng, spec.site_dim)
        if decide_E_recurrence(spec, e).verdict == Verdict.RECURRENT:
            recurrent += 1
            assert decide_phi_recurrence(spec, e, omega).verdict == Verdict.RECURRENT
    assert recurrent > 0


def test_report_json_uses_p_alias(two_level):
    e = complement(np.kron(rank1_projection(0.5, 1.0), POS1))
    payload = decide_E_recurrence(two_level, e).model_dump(mode="json", by_alias=True)
    assert payload["p"] == pytest.approx(0.18)
    assert payload["verdict"] == "Recurrent"
    assert payload["criterion"] == "SufficientBound"


def test_batch_verdicts_follow_input_order(two_level):
    projections = [identity(4), complement(np.kron(rank1_projection(0.5, 1.0), POS1)), np.kron(identity(2), POS2)]
    batch = decide_many_E_recurrence(two_level, projections, workers=3)
    single = [decide_E_recurrence(two_level, e) for e in projections]
    assert [r.bound_p for r in batch] == [r.bound_p for r in single]
    assert [r.verdict for r in batch] == [r.verdict for r in single]


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Complete accessibility
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def test_complete_accessibility(two_level, optimal):
    recurrent = complement(np.kron(rank1_projection(0.5, 1.0), POS1))
    assert decide_E_complete_accessibility(two_level, recurrent).verdict == Access.ACCESSIBLE

    stuck = complement(np.kron(P, POS1))
    report = decide_E_complete_accessibility(optimal, stuck)
    assert report.verdict == Access.NOT_ACCESSIBLE
    assert report.value == pytest.approx(1.0)
    assert decide_phi_complete_accessibility(optimal, stuck, np.kron(Q, identity(2)) / 2).verdict == Access.ACCESSIBLE
    assert decide_phi_complete_accessibility(optimal, stuck, identity(4) / 4).verdict == Access.NOT_ACCESSIBLE
