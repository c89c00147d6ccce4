"""
Recurrence and accessibility decisions.

All verdicts reduce to a few closed-form objects:

  * p = max_j ψ_j(e^⊥). When p < 1 the tail E_o](tail(n)) decays like p^n
    and e is recurrent without further work.
  * The tail limit L = Σ_{j: ψ_j(e^⊥) = 1} M_j(e^⊥). Labels with ψ_j < 1
    contribute geometric factors that vanish in the limit.
  * The residual E(e ⊗ L; I, …, I), which must vanish for recurrence
    (in norm at operator level, under ω_o at state level).

Quantities are banded with Tolerances: ≤ zero_tol reads as zero, up to
inconclusive_factor·zero_tol is Inconclusive, anything above is nonzero.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import Tolerances, get_settings
from app.core.errors import DegenerateProjection, InvalidParameter, ZeroProjection
from app.core.logger import logger
from app.linalg.operators import ComplexMatrix, check_projection, complement, encode_matrix, identity, op_norm
from app.models.observables import ProductObservable
from app.models.reports import (
    Access,
    AccessibilityReport,
    AccessibilityStep,
    CompleteAccessibilityReport,
    Criterion,
    Level,
    RecurrenceReport,
    Verdict,
)
from app.models.walk import WalkSpec
from app.qmc.functionals import psi_vector
from app.qmc.markov import assemble_diagonal, backward_operator, branching_order, forward_operator, mj_blocks, transition_expectation
from app.qmc.state import check_root_state, conditional_expectation_root
from app.recurrence.stopping import StoppingTime, tail_conditional
from app.tree.geometry import Ray, TreeShape

RAY_CHECK_DEPTH = 8
DEFAULT_MAX_M = 8


def _band(x: float, t: Tolerances) -> int:
    """-1: zero, 0: inconclusive, 1: nonzero."""
    if x <= t.zero_tol:
        return -1
    if x <= t.inconclusive_upper:
        return 0
    return 1


def _tolerances(spec: WalkSpec, tolerances: Optional[Tolerances]) -> Tolerances:
    return tolerances or spec.tolerances()


class _TailAnalysis:
    """ψ_j(e^⊥), p and the tail limit for one projection."""

    def __init__(self, spec: WalkSpec, e: ComplexMatrix, t: Tolerances):
        self.e = check_projection(e, t)
        self.e_perp = complement(self.e)
        psi_raw = psi_vector(spec, self.e_perp)
        if np.max(np.abs(psi_raw.imag)) > t.tol or np.any(psi_raw.real < -t.tol) or np.any(psi_raw.real > 1 + t.tol):
            logger.warning(f"Recurrence: ψ_j(e^⊥) outside [0, 1] beyond tolerance: {np.round(psi_raw, 12).tolist()}")
        self.psi = psi_raw.real
        self.p = float(np.max(self.psi))
        self.saturated = np.abs(self.psi - 1.0) <= t.one_tol
        self.labels = [label for label, s in zip(spec.labels, self.saturated) if s]
        self.limit = assemble_diagonal(spec, self.saturated[:, None, None] * mj_blocks(spec, self.e_perp))

    def psi_map(self, spec: WalkSpec):
        return {label: float(v) for label, v in zip(spec.labels, self.psi)}


def _residual(spec: WalkSpec, e: ComplexMatrix, limit: ComplexMatrix, k: int) -> ComplexMatrix:
    children = [limit] + [identity(spec.site_dim)] * (k - 1)
    return transition_expectation(spec, e, children, k)


def _ray_consistency(spec: WalkSpec, e: ComplexMatrix, ray: Ray, k: int, t: Tolerances) -> float:
    explicit = conditional_expectation_root(spec, StoppingTime(e, ray).tail(RAY_CHECK_DEPTH), k)
    return op_norm(explicit - tail_conditional(spec, e, RAY_CHECK_DEPTH, t))


def _ray_directions(ray: Ray) -> List[int]:
    return list(ray.vertex(RAY_CHECK_DEPTH))


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Recurrence
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def decide_E_recurrence(
    spec: WalkSpec,
    e: ComplexMatrix,
    k: Optional[int] = None,
    ray: Optional[Ray] = None,
    tolerances: Optional[Tolerances] = None,
) -> RecurrenceReport:
    t = _tolerances(spec, tolerances)
    k = branching_order(spec, k)
    ray = (ray or Ray()).check(TreeShape(k))
    tail = _TailAnalysis(spec, e, t)

    normalizer = float(np.real(np.trace(forward_operator(spec, tail.e))))
    if normalizer <= t.trace_floor:
        raise DegenerateProjection(f"Tr E(e⊗I) = {normalizer:.3e} is not positive", normalizer=normalizer)

    residual = _residual(spec, tail.e, tail.limit, k)
    residual_norm = op_norm(residual)
    if tail.p < 1.0 - t.tol:
        verdict, criterion = Verdict.RECURRENT, Criterion.SUFFICIENT_BOUND
        if _band(residual_norm, t) >= 0:
            logger.warning(f"Recurrence: p = {tail.p:.6g} < 1 yet the exact residual is {residual_norm:.3e}")
    else:
        criterion = Criterion.EXACT_TAIL_LIMIT
        verdict = {-1: Verdict.RECURRENT, 0: Verdict.INCONCLUSIVE, 1: Verdict.NOT_RECURRENT}[_band(residual_norm, t)]

    report = RecurrenceReport(
        level=Level.E,
        verdict=verdict,
        criterion=criterion,
        p=tail.p,
        psi=tail.psi_map(spec),
        saturated_labels=tail.labels,
        tail_limit=encode_matrix(tail.limit),
        residual_operator=encode_matrix(residual),
        residual_norm=residual_norm,
        normalizer=normalizer,
        ray=_ray_directions(ray),
        ray_consistency_residual=_ray_consistency(spec, tail.e, ray, k, t),
        tolerances=t.model_dump(),
    )
    logger.info(f"Recurrence: E-level {verdict.value} via {criterion.value} (p={tail.p:.6g}, residual={residual_norm:.3e})")
    return report


def decide_phi_recurrence(
    spec: WalkSpec,
    e: ComplexMatrix,
    omega0: ComplexMatrix,
    k: Optional[int] = None,
    ray: Optional[Ray] = None,
    tolerances: Optional[Tolerances] = None,
) -> RecurrenceReport:
    t = _tolerances(spec, tolerances)
    k = branching_order(spec, k)
    ray = (ray or Ray()).check(TreeShape(k))
    w = check_root_state(spec, omega0, t)
    tail = _TailAnalysis(spec, e, t)

    normalizer = float(np.real(np.trace(w @ forward_operator(spec, tail.e))))
    if normalizer <= t.zero_tol:
        raise DegenerateProjection(f"φ(α_o(e)) = {normalizer:.3e} vanishes", normalizer=normalizer)

    residual = _residual(spec, tail.e, tail.limit, k)
    value = abs(complex(np.trace(w @ residual)))
    if tail.p < 1.0 - t.tol:
        verdict, criterion = Verdict.RECURRENT, Criterion.SUFFICIENT_BOUND
    else:
        criterion = Criterion.EXACT_TAIL_LIMIT
        verdict = {-1: Verdict.RECURRENT, 0: Verdict.INCONCLUSIVE, 1: Verdict.NOT_RECURRENT}[_band(value, t)]

    report = RecurrenceReport(
        level=Level.PHI,
        verdict=verdict,
        criterion=criterion,
        p=tail.p,
        psi=tail.psi_map(spec),
        saturated_labels=tail.labels,
        tail_limit=encode_matrix(tail.limit),
        residual_operator=encode_matrix(residual),
        residual_norm=op_norm(residual),
        value=value,
        normalizer=normalizer,
        ray=_ray_directions(ray),
        ray_consistency_residual=_ray_consistency(spec, tail.e, ray, k, t),
        tolerances=t.model_dump(),
    )
    logger.info(f"Recurrence: φ-level {verdict.value} via {criterion.value} (p={tail.p:.6g}, value={value:.3e})")
    return report


def decide_many_E_recurrence(
    spec: WalkSpec,
    projections: Sequence[ComplexMatrix],
    k: Optional[int] = None,
    tolerances: Optional[Tolerances] = None,
    workers: Optional[int] = None,
) -> List[RecurrenceReport]:
    """Independent verdicts for several projections, in input order."""
    workers = workers or get_settings().sampler_workers
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda e: decide_E_recurrence(spec, e, k, tolerances=tolerances), projections))


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Complete accessibility
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

_ACCESS = {-1: Access.ACCESSIBLE, 0: Access.INCONCLUSIVE, 1: Access.NOT_ACCESSIBLE}


def decide_E_complete_accessibility(
    spec: WalkSpec,
    e: ComplexMatrix,
    tolerances: Optional[Tolerances] = None,
) -> CompleteAccessibilityReport:
    """Completely accessible iff the tail limit itself vanishes."""
    t = _tolerances(spec, tolerances)
    tail = _TailAnalysis(spec, e, t)
    value = op_norm(tail.limit)
    return CompleteAccessibilityReport(
        level=Level.E,
        verdict=_ACCESS[_band(value, t)],
        value=value,
        tail_limit=encode_matrix(tail.limit),
        psi=tail.psi_map(spec),
        tolerances=t.model_dump(),
    )


def decide_phi_complete_accessibility(
    spec: WalkSpec,
    e: ComplexMatrix,
    omega0: ComplexMatrix,
    tolerances: Optional[Tolerances] = None,
) -> CompleteAccessibilityReport:
    t = _tolerances(spec, tolerances)
    w = check_root_state(spec, omega0, t)
    tail = _TailAnalysis(spec, e, t)
    value = abs(complex(np.trace(w @ tail.limit)))
    return CompleteAccessibilityReport(
        level=Level.PHI,
        verdict=_ACCESS[_band(value, t)],
        value=value,
        tail_limit=encode_matrix(tail.limit),
        psi=tail.psi_map(spec),
        tolerances=t.model_dump(),
    )


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Accessibility
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def _transported(spec: WalkSpec, f: ComplexMatrix, m_max: int, t: Tolerances) -> Tuple[List[ComplexMatrix], bool]:
    """b_1 = T(f), b_m = P(b_{m-1}); also whether b_m stayed constant for m ≥ 2."""
    if m_max < 1:
        raise InvalidParameter(f"m_max must be >= 1, got {m_max}")
    b = [forward_operator(spec, f)]
    for _ in range(1, m_max):
        b.append(backward_operator(spec, b[-1]))
    collapsed = all(op_norm(x - b[1]) <= t.tol for x in b[2:]) if len(b) > 2 else True
    if not collapsed:
        logger.warning("Accessibility: backward transport did not stabilize after one step")
    return b, collapsed


def _check_nonzero(e: ComplexMatrix, f: ComplexMatrix, t: Tolerances) -> Tuple[ComplexMatrix, ComplexMatrix]:
    e = check_projection(e, t)
    f = check_projection(f, t)
    if op_norm(e) <= t.zero_tol:
        raise ZeroProjection("the starting projection e is zero")
    if op_norm(f) <= t.zero_tol:
        raise ZeroProjection("the target projection f is zero")
    return e, f


def _access_verdict(values: Sequence[float], t: Tolerances) -> Tuple[Access, Optional[int]]:
    bands = [_band(v, t) for v in values]
    for m, band in enumerate(bands, start=1):
        if band == 1:
            return Access.ACCESSIBLE, m
    if any(band == 0 for band in bands):
        return Access.INCONCLUSIVE, None
    return Access.NOT_ACCESSIBLE, None


def _pair_observable(spec: WalkSpec, e: ComplexMatrix, f: ComplexMatrix, ray: Ray, m: int) -> ProductObservable:
    return ProductObservable({(): e, ray.vertex(m): f}, spec.site_dim)


def decide_E_accessibility(
    spec: WalkSpec,
    e: ComplexMatrix,
    f: ComplexMatrix,
    m_max: int = DEFAULT_MAX_M,
    k: Optional[int] = None,
    ray: Optional[Ray] = None,
    tolerances: Optional[Tolerances] = None,
) -> AccessibilityReport:
    """r_m = ‖E(e ⊗ b_m; I, …, I)‖ for m = 1..m_max."""
    t = _tolerances(spec, tolerances)
    k = branching_order(spec, k)
    ray = (ray or Ray()).check(TreeShape(k))
    e, f = _check_nonzero(e, f, t)
    transported, collapsed = _transported(spec, f, m_max, t)

    steps = []
    for m, b in enumerate(transported, start=1):
        value_op = transition_expectation(spec, e, [b] + [identity(spec.site_dim)] * (k - 1), k)
        factored = conditional_expectation_root(spec, _pair_observable(spec, e, f, ray, m), k)
        steps.append(AccessibilityStep(m=m, value=op_norm(value_op), cross_check_residual=op_norm(value_op - factored)))

    verdict, first_m = _access_verdict([s.value for s in steps], t)
    logger.info(f"Accessibility: E-level {verdict.value} (max r_m = {max(s.value for s in steps):.3e})")
    return AccessibilityReport(
        level=Level.E,
        verdict=verdict,
        accessible=verdict == Access.ACCESSIBLE,
        first_m=first_m,
        per_m=steps,
        collapse_observed=collapsed,
        tolerances=t.model_dump(),
    )


def decide_phi_accessibility(
    spec: WalkSpec,
    e: ComplexMatrix,
    f: ComplexMatrix,
    omega0: ComplexMatrix,
    m_max: int = DEFAULT_MAX_M,
    k: Optional[int] = None,
    ray: Optional[Ray] = None,
    tolerances: Optional[Tolerances] = None,
) -> AccessibilityReport:
    """s_m = Tr(ω_o E(e ⊗ b_m; I, …, I)) for m = 1..m_max."""
    t = _tolerances(spec, tolerances)
    k = branching_order(spec, k)
    ray = (ray or Ray()).check(TreeShape(k))
    w = check_root_state(spec, omega0, t)
    e, f = _check_nonzero(e, f, t)
    transported, collapsed = _transported(spec, f, m_max, t)

    steps = []
    for m, b in enumerate(transported, start=1):
        value_op = transition_expectation(spec, e, [b] + [identity(spec.site_dim)] * (k - 1), k)
        s_m = complex(np.trace(w @ value_op))
        factored = complex(np.trace(w @ conditional_expectation_root(spec, _pair_observable(spec, e, f, ray, m), k)))
        steps.append(AccessibilityStep(m=m, value=abs(s_m), cross_check_residual=abs(s_m - factored)))

    verdict, first_m = _access_verdict([s.value for s in steps], t)
    logger.info(f"Accessibility: φ-level {verdict.value} (max |s_m| = {max(s.value for s in steps):.3e})")
    return AccessibilityReport(
        level=Level.PHI,
        verdict=verdict,
        accessible=verdict == Access.ACCESSIBLE,
        first_m=first_m,
        per_m=steps,
        collapse_observed=collapsed,
        tolerances=t.model_dump(),
    )
