"""
Dense complex operator algebra.

Everything the chain machinery needs on B(H), B(K) and B(H⊗K): Kronecker
products, partial traces, principal square roots of density blocks, rank-1
projections of M_2(C), and the checks / norms used by every "= 0" verdict.

Matrices are plain numpy complex128 arrays. Functions never mutate their
inputs; values returned are fresh arrays.
"""

from typing import Iterable, List, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from app.core.config import Tolerances, resolve_tolerances
from app.core.errors import BadPhase, DimensionMismatch, InvalidParameter, NotAProjection, NotPSD

ComplexMatrix = NDArray[np.complex128]


def as_matrix(data: ArrayLike) -> ComplexMatrix:
    m = np.asarray(data, dtype=np.complex128)
    if m.ndim != 2 or 0 in m.shape:
        raise DimensionMismatch(f"expected a non-empty 2-d matrix, got shape {m.shape}", shape=m.shape)
    return m


def as_square(data: ArrayLike) -> ComplexMatrix:
    m = as_matrix(data)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}", shape=m.shape)
    return m


def dagger(a: ArrayLike) -> ComplexMatrix:
    return as_matrix(a).conj().T


def identity(dim: int) -> ComplexMatrix:
    return np.eye(dim, dtype=np.complex128)


def ket(index: int, dim: int) -> NDArray[np.complex128]:
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def ketbra(row: int, col: int, dim: int) -> ComplexMatrix:
    """|row⟩⟨col| in a dim-dimensional basis."""
    m = np.zeros((dim, dim), dtype=np.complex128)
    m[row, col] = 1.0
    return m


def kron(a: ArrayLike, b: ArrayLike) -> ComplexMatrix:
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(factors: Iterable[ArrayLike]) -> ComplexMatrix:
    result: Optional[ComplexMatrix] = None
    for f in factors:
        result = as_matrix(f) if result is None else np.kron(result, as_matrix(f))
    if result is None:
        raise DimensionMismatch("kron_all needs at least one factor")
    return result


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Norms and checks
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def op_norm(a: ArrayLike) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(as_matrix(a), 2))


def hermitian_residual(a: ArrayLike) -> float:
    m = as_square(a)
    return float(np.max(np.abs(m - m.conj().T)))


def min_eigenvalue(a: ArrayLike) -> float:
    """Smallest eigenvalue of the Hermitian part."""
    m = as_square(a)
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])


def is_psd(a: ArrayLike, tolerances: Optional[Tolerances] = None) -> bool:
    t = resolve_tolerances(tolerances)
    return hermitian_residual(a) <= t.tol and min_eigenvalue(a) >= -t.psd_tol


def check_density(rho: ArrayLike, tolerances: Optional[Tolerances] = None) -> ComplexMatrix:
    """Validate PSD-ness within psd_tol; trace normalization is the caller's business."""
    t = resolve_tolerances(tolerances)
    m = as_square(rho)
    herm = hermitian_residual(m)
    if herm > t.tol:
        raise NotPSD(f"operator is not Hermitian (residual {herm:.3e})", hermitian_residual=herm)
    lam = min_eigenvalue(m)
    if lam < -t.psd_tol:
        raise NotPSD(f"operator has eigenvalue {lam:.3e} < -{t.psd_tol:.1e}", min_eigenvalue=lam)
    return m


def check_projection(p: ArrayLike, tolerances: Optional[Tolerances] = None) -> ComplexMatrix:
    t = resolve_tolerances(tolerances)
    m = as_square(p)
    idem = op_norm(m @ m - m)
    herm = op_norm(m - m.conj().T)
    if idem > t.tol or herm > t.tol:
        raise NotAProjection(
            f"not an orthogonal projection (|P²-P|={idem:.3e}, |P-P†|={herm:.3e})",
            idempotence_residual=idem,
            hermitian_residual=herm,
        )
    return m


def complement(p: ArrayLike) -> ComplexMatrix:
    m = as_square(p)
    return identity(m.shape[0]) - m


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Square roots and partial traces
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def principal_sqrt(rho: ArrayLike, tolerances: Optional[Tolerances] = None) -> ComplexMatrix:
    """
    Hermitian PSD square root through a Hermitian eigendecomposition.

    Eigenvalues in (-psd_tol, 0) are clipped to zero; anything more negative
    raises NotPSD.
    """
    t = resolve_tolerances(tolerances)
    m = as_square(rho)
    herm = hermitian_residual(m)
    if herm > t.tol:
        raise NotPSD(f"cannot take a PSD square root of a non-Hermitian operator (residual {herm:.3e})")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    if w[0] < -t.psd_tol:
        raise NotPSD(f"eigenvalue {w[0]:.3e} < -{t.psd_tol:.1e}", min_eigenvalue=float(w[0]))
    root = np.sqrt(np.clip(w, 0.0, None))
    return (v * root) @ v.conj().T


def partial_trace(a: ArrayLike, dims: Sequence[int], keep: Sequence[int]) -> ComplexMatrix:
    """
    Trace out every tensor factor not listed in `keep`.

    `dims` gives the factor dimensions in kron order; kept factors stay in
    their original relative order.
    """
    m = as_square(a)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise DimensionMismatch(
            f"operator of shape {m.shape} does not match factor dims {dims}", shape=m.shape, dims=dims
        )
    n = len(dims)
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= n for i in keep):
        raise DimensionMismatch(f"keep indices {keep} out of range for {n} factors")

    rows = list(range(n))
    cols = [n + i if i in keep else i for i in range(n)]
    out = keep + [n + i for i in keep]
    reduced = np.einsum(m.reshape(dims + dims), rows + cols, out)
    kept_dim = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.asarray(reduced, dtype=np.complex128).reshape(kept_dim, kept_dim)


def partial_trace_first(a: ArrayLike, dim_first: int, dim_rest: int) -> ComplexMatrix:
    return partial_trace(a, [dim_first, dim_rest], keep=[1])


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Projections of M_2(C) and K
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def rank1_projection(eps: float, z: complex, tolerances: Optional[Tolerances] = None) -> ComplexMatrix:
    """
    The general rank-1 projection of M_2(C):

        [[ eps,                   z·sqrt(eps(1-eps)) ],
         [ conj(z)·sqrt(eps(1-eps)), 1 - eps          ]]
    """
    t = resolve_tolerances(tolerances)
    eps = float(eps)
    z = complex(z)
    if not 0.0 <= eps <= 1.0:
        raise InvalidParameter(f"eps must lie in [0, 1], got {eps}", eps=eps)
    if abs(abs(z) - 1.0) > t.tol:
        raise BadPhase(f"|z| must be 1, got {abs(z):.12g}", modulus=abs(z))
    off = np.sqrt(eps * (1.0 - eps))
    return np.array([[eps, z * off], [np.conj(z) * off, 1.0 - eps]], dtype=np.complex128)


def projector(vector: ArrayLike, tolerances: Optional[Tolerances] = None) -> ComplexMatrix:
    """|ξ⟩⟨ξ| for a unit vector ξ."""
    t = resolve_tolerances(tolerances)
    v = np.asarray(vector, dtype=np.complex128).reshape(-1)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > t.tol:
        raise InvalidParameter(f"vector must have unit norm, got {norm:.12g}", norm=float(norm))
    return np.outer(v, v.conj())


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# JSON codec: complex scalars as [re, im]
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def decode_complex(value) -> complex:
    if isinstance(value, (int, float, complex)):
        return complex(value)
    if len(value) != 2:
        raise InvalidParameter(f"complex scalars are [re, im] pairs, got {value!r}")
    return complex(float(value[0]), float(value[1]))


def decode_matrix(rows) -> ComplexMatrix:
    return as_matrix([[decode_complex(x) for x in row] for row in rows])


def encode_complex(z: complex) -> List[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_matrix(m: ArrayLike) -> List[List[List[float]]]:
    return [[encode_complex(x) for x in row] for row in as_matrix(m)]
