"""
Linear functionals on a site algebra B(H⊗K).

For a site operator b, b_[m,n] denotes its H-block between positions m and n:
b_[m,n] = (I ⊗ ⟨m|) b (I ⊗ |n⟩). With ρ̂_j^{1/2} = ρ_j^{1/2}/(Tr ρ_j)^{1/2}:

    φ_{jj'}(b) = Tr(ρ̂_{j'}^{1/2} ρ̂_j^{1/2} b_[j,j'])
    φ_j        = φ_{jj}
    ψ_j(b)     = Σ_i Tr(B_j^i ρ̂_j B_j^{i†} b_[i,i])

ψ_j is the state b ↦ φ_j(T(b)) and its values on position projections give
the classical kernel q(j, i) = ψ_j(I ⊗ |i⟩⟨i|).
"""

from functools import lru_cache
from typing import Optional

import numpy as np

from app.core.config import Tolerances
from app.core.errors import DimensionMismatch
from app.core.logger import logger
from app.linalg.operators import ComplexMatrix
from app.models.walk import Label, WalkSpec


def site_blocks(spec: WalkSpec, b: ComplexMatrix) -> np.ndarray:
    """b as a (d, L, d, L) tensor: entry [h, m, h', n] = ⟨h,m| b |h',n⟩."""
    b = np.asarray(b, dtype=np.complex128)
    if b.shape != (spec.site_dim, spec.site_dim):
        raise DimensionMismatch(f"site operator must be {spec.site_dim}x{spec.site_dim}, got {b.shape}", shape=b.shape)
    return b.reshape(spec.dim_internal, spec.dim_position, spec.dim_internal, spec.dim_position)


def diagonal_blocks(spec: WalkSpec, b: ComplexMatrix) -> np.ndarray:
    """(L, d, d) stack of b_[i,i]."""
    return np.einsum("aibi->iab", site_blocks(spec, b))


@lru_cache(maxsize=64)
def _pair_weights(spec: WalkSpec) -> np.ndarray:
    """X[j, j'] = ρ̂_{j'}^{1/2} ρ̂_j^{1/2}."""
    s = spec.normalized_sqrt_rho
    return np.einsum("qab,jbc->jqac", s, s)


@lru_cache(maxsize=64)
def propagated_blocks(spec: WalkSpec) -> np.ndarray:
    """C[j, i] = B_j^i ρ̂_j B_j^{i†}; the trace of C[j, i] is q(j, i)."""
    s = spec.normalized_sqrt_rho
    rho_hat = np.einsum("jab,jbc->jac", s, s)
    B = spec.transitions
    return np.einsum("jiab,jbc,jidc->jiad", B, rho_hat, B.conj())


def phi_matrix(spec: WalkSpec, b: ComplexMatrix) -> np.ndarray:
    """Φ[j, j'] = φ_{jj'}(b) for every pair of labels."""
    return np.einsum("jqxy,yjxq->jq", _pair_weights(spec), site_blocks(spec, b))


def phi_pair(spec: WalkSpec, j: Label, j2: Label, b: ComplexMatrix) -> complex:
    x = _pair_weights(spec)[spec.index(j), spec.index(j2)]
    block = site_blocks(spec, b)[:, spec.index(j), :, spec.index(j2)]
    return complex(np.trace(x @ block))


def phi_vector(spec: WalkSpec, b: ComplexMatrix) -> np.ndarray:
    return np.diagonal(phi_matrix(spec, b)).copy()


def phi(spec: WalkSpec, j: Label, b: ComplexMatrix) -> complex:
    """The state φ_j."""
    return phi_pair(spec, j, j, b)


def psi_vector(spec: WalkSpec, b: ComplexMatrix) -> np.ndarray:
    return np.einsum("jiab,iba->j", propagated_blocks(spec), diagonal_blocks(spec, b))


def psi(spec: WalkSpec, j: Label, b: ComplexMatrix) -> complex:
    return complex(psi_vector(spec, b)[spec.index(j)])


def classical_kernel(spec: WalkSpec, tolerances: Optional[Tolerances] = None) -> np.ndarray:
    """Row-stochastic matrix q(j, i) = Tr(B_j^i ρ_j B_j^{i†}) / Tr ρ_j."""
    t = tolerances or spec.tolerances()
    q = np.real(np.einsum("jiaa->ji", propagated_blocks(spec)))
    drift = np.max(np.abs(q.sum(axis=1) - 1.0))
    if drift > t.tol:
        logger.warning(f"Kernel: rows deviate from 1 by {drift:.3e}; is the walk normalized?")
    return q
