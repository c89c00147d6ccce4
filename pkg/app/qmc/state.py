"""
Root conditional expectation and the chain state.

For a product observable a with root factor a_o,

    E_o](a) = Σ_j M_j(a_o) Π_{u ≠ o} ψ_j(a_u)
    φ(a)    = Tr(ω_o E_o](a))

Both are extended linearly to observable sums.
"""

from typing import Optional, Sequence

import numpy as np

from app.core.config import Tolerances
from app.core.errors import BadState, DimensionMismatch, InvalidParameter
from app.linalg.operators import ComplexMatrix, hermitian_residual, identity, ketbra, min_eigenvalue
from app.models.observables import Observable, ProductObservable, as_sum
from app.models.walk import Label, WalkSpec
from app.qmc.functionals import psi_vector
from app.qmc.markov import assemble_diagonal, branching_order, mj_blocks
from app.tree.geometry import ROOT, Ray, TreeShape


def _product_term(spec: WalkSpec, obs: ProductObservable, shape: TreeShape) -> ComplexMatrix:
    weights = np.ones(spec.dim_position, dtype=np.complex128)
    root = identity(spec.site_dim)
    for v, factor in obs.factors.items():
        shape.check_vertex(v)
        if v == ROOT:
            root = factor
        else:
            weights = weights * psi_vector(spec, factor)
    return assemble_diagonal(spec, weights[:, None, None] * mj_blocks(spec, root))


def conditional_expectation_root(spec: WalkSpec, a: Observable, k: Optional[int] = None) -> ComplexMatrix:
    shape = TreeShape(branching_order(spec, k))
    terms = as_sum(a)
    if terms.site_dim != spec.site_dim:
        raise DimensionMismatch(f"observable site dimension {terms.site_dim} differs from the walk's {spec.site_dim}")
    out = np.zeros((spec.site_dim, spec.site_dim), dtype=np.complex128)
    for coeff, obs in terms:
        out += coeff * _product_term(spec, obs, shape)
    return out


def check_root_state(spec: WalkSpec, omega0: ComplexMatrix, tolerances: Optional[Tolerances] = None) -> ComplexMatrix:
    t = tolerances or spec.tolerances()
    w = np.asarray(omega0, dtype=np.complex128)
    if w.shape != (spec.site_dim, spec.site_dim):
        raise BadState(f"omega0 must be {spec.site_dim}x{spec.site_dim}, got {w.shape}")
    herm = hermitian_residual(w)
    lam = min_eigenvalue(w)
    tr = complex(np.trace(w))
    if herm > t.tol or lam < -t.psd_tol or abs(tr - 1.0) > t.tol:
        raise BadState(
            f"omega0 is not a density operator (hermitian residual {herm:.3e}, min eigenvalue {lam:.3e}, trace {tr.real:.12g})",
            hermitian_residual=herm,
            min_eigenvalue=lam,
        )
    return w


def qmc_state(
    spec: WalkSpec,
    omega0: ComplexMatrix,
    a: Observable,
    k: Optional[int] = None,
    tolerances: Optional[Tolerances] = None,
) -> complex:
    w = check_root_state(spec, omega0, tolerances)
    return complex(np.trace(w @ conditional_expectation_root(spec, a, k)))


def homogeneous_root_state(spec: WalkSpec, weights: Optional[Sequence[float]] = None) -> ComplexMatrix:
    """
    ω = Σ_j w_j ρ̂_j ⊗ |j⟩⟨j|, w_j ∝ Tr ρ_j by default.

    Tr(ω M_j(x)) = w_j ψ_j(x) for every x, so moving a factor off the root
    never changes φ: the chain is invariant under every shift α_g.
    """
    if weights is None:
        w = spec.rho_traces / spec.rho_traces.sum()
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (spec.dim_position,) or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidParameter("weights must be a probability vector over the labels")
    s = spec.normalized_sqrt_rho
    rho_hat = np.einsum("jab,jbc->jac", s, s)
    return assemble_diagonal(spec, w[:, None, None] * rho_hat)


def position_observable(spec: WalkSpec, labels: Sequence[Label], ray: Optional[Ray] = None) -> ProductObservable:
    """I ⊗ |i_n⟩⟨i_n| at the n-th vertex of the ray, for the given label sequence."""
    ray = ray or Ray()
    vertices = ray.vertices(len(labels) - 1) if labels else []
    n = spec.dim_position
    return ProductObservable(
        {v: np.kron(identity(spec.dim_internal), ketbra(spec.index(i), spec.index(i), n)) for v, i in zip(vertices, labels)},
        spec.site_dim,
    )


def position_marginal(
    spec: WalkSpec,
    omega0: ComplexMatrix,
    labels: Sequence[Label],
    ray: Optional[Ray] = None,
    k: Optional[int] = None,
) -> float:
    """φ of the position event (i_0, …, i_n) along a ray."""
    return float(np.real(qmc_state(spec, omega0, position_observable(spec, labels, ray), k)))
