"""
Transition expectation of the tree chain and the Markov operators it induces.

The interaction of a vertex with its k children is

    K = Σ_{i,j} M_j^{i†} ⊗ (A_j^i)^{⊗k},   A_j^i = ρ̂_j^{1/2} ⊗ |i⟩⟨j|

and E(x) = Tr_children(K x K†). On elementary tensors this collapses to

    E(a; c_1..c_k) = Σ_{i,j,j'} M_j^{i†} a M_{j'}^i Π_ℓ φ_{jj'}(c_ℓ)

which is what transition_expectation evaluates. The dense Kraus form is kept
as an independent check and for operators that are not elementary tensors.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from app.core.config import get_settings
from app.core.errors import DimensionMismatch, InvalidParameter, SizeOverflow
from app.linalg.operators import ComplexMatrix, identity, ketbra, partial_trace
from app.models.walk import Label, WalkSpec
from app.qmc.functionals import diagonal_blocks, phi_matrix, phi_vector


def _assemble(spec: WalkSpec, blocks: np.ndarray) -> ComplexMatrix:
    """Σ_{j,j'} R[j,j'] ⊗ |j⟩⟨j'| from an (L, L, d, d) stack."""
    d, n = spec.dim_internal, spec.dim_position
    return np.ascontiguousarray(blocks.transpose(2, 0, 3, 1)).reshape(d * n, d * n)


def assemble_diagonal(spec: WalkSpec, blocks: np.ndarray) -> ComplexMatrix:
    """Σ_j G_j ⊗ |j⟩⟨j| from an (L, d, d) stack."""
    n = spec.dim_position
    full = np.zeros((n, n) + blocks.shape[1:], dtype=np.complex128)
    full[np.arange(n), np.arange(n)] = blocks
    return _assemble(spec, full)


def branching_order(spec: WalkSpec, k: Optional[int]) -> int:
    k = spec.k if k is None else int(k)
    if k < 1:
        raise InvalidParameter(f"branching order must be >= 1, got {k}")
    return k


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Single-site maps
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def mj_blocks(spec: WalkSpec, a: ComplexMatrix) -> np.ndarray:
    """G[j] = Σ_i B_j^{i†} a_[i,i] B_j^i, so that M_j(a) = G[j] ⊗ |j⟩⟨j|."""
    B = spec.transitions
    return np.einsum("jiba,ibc,jicd->jad", B.conj(), diagonal_blocks(spec, a), B)


def mj_map(spec: WalkSpec, j: Label, a: ComplexMatrix) -> ComplexMatrix:
    idx = spec.index(j)
    n = spec.dim_position
    return np.kron(mj_blocks(spec, a)[idx], ketbra(idx, idx, n))


def forward_operator(spec: WalkSpec, a: ComplexMatrix) -> ComplexMatrix:
    """T(a) = Σ_{i,j} M_j^{i†} a M_j^i = Σ_j M_j(a)."""
    return assemble_diagonal(spec, mj_blocks(spec, a))


def backward_operator(spec: WalkSpec, b: ComplexMatrix) -> ComplexMatrix:
    """P(b) = Σ_j φ_j(b) I ⊗ |j⟩⟨j|."""
    weights = phi_vector(spec, b)
    d = spec.dim_internal
    return assemble_diagonal(spec, weights[:, None, None] * identity(d)[None])


def backward_power(spec: WalkSpec, b: ComplexMatrix, m: int) -> ComplexMatrix:
    if m < 0:
        raise InvalidParameter(f"power must be >= 0, got {m}")
    out = np.asarray(b, dtype=np.complex128)
    for _ in range(m):
        out = backward_operator(spec, out)
    return out


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Transition expectation
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def transition_expectation(
    spec: WalkSpec,
    a_root: ComplexMatrix,
    children: Sequence[ComplexMatrix],
    k: Optional[int] = None,
) -> ComplexMatrix:
    k = branching_order(spec, k)
    if len(children) != k:
        raise DimensionMismatch(f"expected {k} child operators, got {len(children)}", k=k, children=len(children))
    weights = np.ones((spec.dim_position, spec.dim_position), dtype=np.complex128)
    for c in children:
        weights = weights * phi_matrix(spec, c)
    B = spec.transitions
    blocks = np.einsum("jiba,ibc,qicd->jqad", B.conj(), diagonal_blocks(spec, a_root), B)
    return _assemble(spec, blocks * weights[:, :, None, None])


@dataclass(frozen=True, eq=False)
class KrausInteraction:
    """
    Factored interaction: root_factors[j, i] = M_j^{i†} and
    child_factors[j, i] = A_j^i, both on H⊗K.
    """

    spec: WalkSpec
    k: int

    @cached_property
    def root_factors(self) -> np.ndarray:
        n = self.spec.dim_position
        out = np.empty((n, n, self.spec.site_dim, self.spec.site_dim), dtype=np.complex128)
        for j in range(n):
            for i in range(n):
                out[j, i] = np.kron(self.spec.transitions[j, i], ketbra(i, j, n)).conj().T
        return out

    @cached_property
    def child_factors(self) -> np.ndarray:
        n = self.spec.dim_position
        s = self.spec.normalized_sqrt_rho
        out = np.empty((n, n, self.spec.site_dim, self.spec.site_dim), dtype=np.complex128)
        for j in range(n):
            for i in range(n):
                out[j, i] = np.kron(s[j], ketbra(i, j, n))
        return out

    @property
    def total_dim(self) -> int:
        return self.spec.site_dim ** (1 + self.k)

    def pair_trace(self, j: Label, i: Label, j2: Label, i2: Label, b: ComplexMatrix) -> complex:
        """Tr(A_{j2}^{i2†} A_j^i b); equals δ_{i,i2} φ_{j j2}(b)."""
        spec = self.spec
        a1 = self.child_factors[spec.index(j), spec.index(i)]
        a2 = self.child_factors[spec.index(j2), spec.index(i2)]
        return complex(np.trace(a2.conj().T @ a1 @ np.asarray(b, dtype=np.complex128)))

    def dense(self, cap: Optional[int] = None) -> ComplexMatrix:
        cap = cap if cap is not None else get_settings().dense_cap
        if self.total_dim > cap:
            raise SizeOverflow(
                f"interaction on {1 + self.k} sites has dimension {self.total_dim} (cap {cap})",
                size=self.total_dim,
                cap=cap,
            )
        n = self.spec.dim_position
        K = np.zeros((self.total_dim, self.total_dim), dtype=np.complex128)
        for j in range(n):
            for i in range(n):
                term = self.root_factors[j, i]
                for _ in range(self.k):
                    term = np.kron(term, self.child_factors[j, i])
                K += term
        return K


def transition_expectation_kraus(
    spec: WalkSpec,
    a: ComplexMatrix,
    k: Optional[int] = None,
    cap: Optional[int] = None,
) -> ComplexMatrix:
    """Tr_children(K a K†) for an arbitrary operator a on the 1+k sites."""
    k = branching_order(spec, k)
    K = KrausInteraction(spec, k).dense(cap)
    a = np.asarray(a, dtype=np.complex128)
    if a.shape != K.shape:
        raise DimensionMismatch(f"operator must be {K.shape[0]}x{K.shape[1]}, got {a.shape}")
    return partial_trace(K @ a @ K.conj().T, [spec.site_dim] * (1 + k), keep=[0])
