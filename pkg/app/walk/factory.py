"""
Ready-made walks: the two-level two-label model, the trivial walk and random
walks for property tests.
"""

from typing import Optional, Sequence

import numpy as np

from app.core.errors import InvalidParameter
from app.linalg.operators import ComplexMatrix, identity
from app.models.walk import WalkSpec

TWO_LEVEL_LABELS = ("1", "2")


def two_level_model(
    a: complex,
    b: complex,
    c: complex,
    d: complex,
    rho: Optional[Sequence[ComplexMatrix]] = None,
    k: int = 2,
    omega0: Optional[ComplexMatrix] = None,
) -> WalkSpec:
    """
    Two labels, H = C²:

        B_1^1 = diag(a, b)   B_1^2 = diag(c, d)
        B_2^1 = |1⟩⟨2|       B_2^2 = diag(1, 0)

    Normalized iff |a|² + |c|² = |b|² + |d|² = 1. The initial blocks
    default to diag(1/2, 0) at both labels.
    """
    transitions = np.zeros((2, 2, 2, 2), dtype=np.complex128)
    transitions[0, 0] = np.diag([a, b])
    transitions[0, 1] = np.diag([c, d])
    transitions[1, 0] = [[0, 1], [0, 0]]
    transitions[1, 1] = np.diag([1, 0])
    if rho is None:
        rho = [np.diag([0.5, 0.0]), np.diag([0.5, 0.0])]
    return WalkSpec(TWO_LEVEL_LABELS, transitions, np.asarray(rho, dtype=np.complex128), omega0, k)


def identity_walk(n_labels: int = 2, dim_internal: int = 2, k: int = 2) -> WalkSpec:
    """B_j^i = δ_ij I: nothing ever moves."""
    transitions = np.zeros((n_labels, n_labels, dim_internal, dim_internal), dtype=np.complex128)
    for j in range(n_labels):
        transitions[j, j] = identity(dim_internal)
    rho = np.stack([identity(dim_internal) / (n_labels * dim_internal)] * n_labels)
    return WalkSpec(tuple(str(i + 1) for i in range(n_labels)), transitions, rho, None, k)


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> ComplexMatrix:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_density(rng: np.random.Generator, dim: int, rank: Optional[int] = None) -> ComplexMatrix:
    g = ginibre(rng, dim, rank or dim)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_projection(rng: np.random.Generator, dim: int, rank: Optional[int] = None) -> ComplexMatrix:
    rank = int(rng.integers(0, dim + 1)) if rank is None else rank
    if not 0 <= rank <= dim:
        raise InvalidParameter(f"rank must lie in 0..{dim}, got {rank}")
    if rank == 0:
        return np.zeros((dim, dim), dtype=np.complex128)
    q, _ = np.linalg.qr(ginibre(rng, dim, rank))
    return q @ q.conj().T


def random_walk_spec(
    rng: np.random.Generator,
    n_labels: int = 2,
    dim_internal: int = 2,
    k: int = 2,
    with_omega0: bool = False,
) -> WalkSpec:
    """
    Each column block of a random isometry V: H → C^{|Λ|}⊗H gives the
    family {B_j^i}_i, so Σ_i B_j^{i†}B_j^i = V†V = I. Initial blocks are
    full-rank with total trace 1.
    """
    n, d = n_labels, dim_internal
    transitions = np.zeros((n, n, d, d), dtype=np.complex128)
    for j in range(n):
        v, _ = np.linalg.qr(ginibre(rng, n * d, d))
        transitions[j] = v.reshape(n, d, d)
    weights = rng.dirichlet(np.ones(n))
    rho = np.stack([w * random_density(rng, d) for w in weights])
    omega0 = random_density(rng, n * d) if with_omega0 else None
    return WalkSpec(tuple(str(i + 1) for i in range(n)), transitions, rho, omega0, k)
