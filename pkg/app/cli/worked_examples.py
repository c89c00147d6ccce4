"""
Regression suite on the two-level model.

  1. Recurrence through the sufficient bound: e^⊥ = e(1/2, 1, (1,0)).
  2. Optimality of the bound: with |a| = 1 the projection (p⊗|1⟩⟨1|)^⊥ is
     not recurrent, and a root state blind to the residual hides that.
  3. Accessibility of p⊗|1⟩⟨1| from I⊗|1⟩⟨1|, lost under a root state
     supported on q, and the absence of anything accessible from e(0, z, ξ).
"""

from typing import Callable, List

import numpy as np

from app.linalg.operators import complement, identity, ketbra, op_norm, projector, rank1_projection
from app.models.reports import Access, ExampleCheck, ExampleResult, Verdict
from app.recurrence.decide import decide_E_accessibility, decide_E_recurrence, decide_phi_accessibility, decide_phi_recurrence
from app.walk.factory import two_level_model

P = np.diag([1.0, 0.0]).astype(np.complex128)
Q = np.diag([0.0, 1.0]).astype(np.complex128)
POS1 = ketbra(0, 0, 2)
MAXIMALLY_MIXED = identity(4) / 4
CLOSE = 1e-9


def rank1_site_projection(eps: float, z: complex, xi) -> np.ndarray:
    """e(ε, z, ξ) = p(ε, z) ⊗ |ξ⟩⟨ξ|."""
    return np.kron(rank1_projection(eps, z), projector(np.asarray(xi, dtype=np.complex128)))


def _check(name: str, expected, observed, passed: bool) -> ExampleCheck:
    return ExampleCheck(name=name, expected=str(expected), observed=str(observed), passed=bool(passed))


def _result(name: str, checks: List[ExampleCheck]) -> ExampleResult:
    return ExampleResult(name=name, passed=all(c.passed for c in checks), checks=checks)


def sufficient_bound_example() -> ExampleResult:
    spec = two_level_model(0.6, 0.8, 0.8, 0.6)
    e = complement(rank1_site_projection(0.5, 1.0, [1.0, 0.0]))
    E = decide_E_recurrence(spec, e)
    phi = decide_phi_recurrence(spec, e, MAXIMALLY_MIXED)
    return _result("sufficient-bound", [
        _check("E verdict", Verdict.RECURRENT.value, E.verdict.value, E.verdict == Verdict.RECURRENT),
        _check("criterion", "SufficientBound", E.criterion.value, E.criterion.value == "SufficientBound"),
        _check("p", 0.18, round(E.bound_p, 12), abs(E.bound_p - 0.18) <= CLOSE),
        _check("ψ_2(e^⊥)", 0.0, round(E.psi["2"], 12), abs(E.psi["2"]) <= CLOSE),
        _check("φ verdict (I/4)", Verdict.RECURRENT.value, phi.verdict.value, phi.verdict == Verdict.RECURRENT),
    ])


def optimal_bound_example() -> ExampleResult:
    spec = two_level_model(1.0, 0.6, 0.0, 0.8)
    e = complement(np.kron(P, POS1))
    expected_residual = np.kron(Q, POS1)
    E = decide_E_recurrence(spec, e)
    residual = np.array([[complex(*x) for x in row] for row in E.residual_operator])
    faithful = decide_phi_recurrence(spec, e, MAXIMALLY_MIXED)
    blind = decide_phi_recurrence(spec, e, np.kron(P, identity(2)) / 2)
    return _result("optimal-bound", [
        _check("E verdict", Verdict.NOT_RECURRENT.value, E.verdict.value, E.verdict == Verdict.NOT_RECURRENT),
        _check("p", 1.0, round(E.bound_p, 12), abs(E.bound_p - 1.0) <= CLOSE),
        _check("residual = q⊗|1⟩⟨1|", 0.0, op_norm(residual - expected_residual), op_norm(residual - expected_residual) <= CLOSE),
        _check("φ verdict (I/4)", Verdict.NOT_RECURRENT.value, faithful.verdict.value, faithful.verdict == Verdict.NOT_RECURRENT),
        _check("φ verdict (p⊗I/2)", Verdict.RECURRENT.value, blind.verdict.value, blind.verdict == Verdict.RECURRENT),
    ])


def accessibility_example() -> ExampleResult:
    spec = two_level_model(0.6, 0.8, 0.8, 0.6)
    e1 = np.kron(P, POS1)
    sigma = np.kron(identity(2), POS1)
    E = decide_E_accessibility(spec, e1, sigma)
    blind = decide_phi_accessibility(spec, e1, sigma, np.kron(Q, identity(2)) / 2)
    faithful = decide_phi_accessibility(spec, e1, sigma, MAXIMALLY_MIXED)
    empty = decide_E_accessibility(spec, identity(4), rank1_site_projection(0.0, 1.0, [np.sqrt(0.5), np.sqrt(0.5)]))
    r1 = E.per_m[0].value
    s1 = faithful.per_m[0].value
    return _result("accessibility", [
        _check("E verdict", Access.ACCESSIBLE.value, E.verdict.value, E.verdict == Access.ACCESSIBLE),
        _check("r_1 = |a|⁴", 0.1296, round(r1, 12), abs(r1 - 0.1296) <= CLOSE),
        _check("φ verdict (q⊗I/2)", Access.NOT_ACCESSIBLE.value, blind.verdict.value, blind.verdict == Access.NOT_ACCESSIBLE),
        _check("φ verdict (I/4)", Access.ACCESSIBLE.value, faithful.verdict.value, faithful.verdict == Access.ACCESSIBLE),
        _check("s_1 = |a|⁴/4", 0.0324, round(s1, 12), abs(s1 - 0.0324) <= CLOSE),
        _check("nothing accessible from e(0, z, ξ)", Access.NOT_ACCESSIBLE.value, empty.verdict.value, empty.verdict == Access.NOT_ACCESSIBLE),
    ])


EXAMPLES: List[Callable[[], ExampleResult]] = [
    sufficient_bound_example,
    optimal_bound_example,
    accessibility_example,
]


def run_worked_examples() -> List[ExampleResult]:
    return [example() for example in EXAMPLES]
