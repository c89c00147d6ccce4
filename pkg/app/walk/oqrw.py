"""
Open quantum random walk on a finite label set.

A state of the walk is a family of blocks ρ_i on H, one per label, standing
for Σ_i ρ_i ⊗ |i⟩⟨i| on H⊗K. One step maps it to

    ρ_i' = Σ_j B_j^i ρ_j B_j^{i†}

and the probability of a label path i_0 → … → i_n is the trace of the
corresponding Kraus chain applied to ρ_{i_0}.
"""

from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.config import Tolerances
from app.core.errors import DimensionMismatch, InvalidParameter
from app.core.logger import logger
from app.linalg.operators import ComplexMatrix, hermitian_residual, identity, ketbra, min_eigenvalue, op_norm
from app.models.reports import ValidationReport
from app.models.walk import Label, WalkSpec

Path = Tuple[str, ...]


@dataclass(frozen=True)
class LiftedJump:
    """M_j^i = B_j^i ⊗ |i⟩⟨j| on H⊗K."""

    i: str
    j: str
    operator: ComplexMatrix


def validate(spec: WalkSpec, tolerances: Optional[Tolerances] = None) -> ValidationReport:
    t = tolerances or spec.tolerances()
    d = spec.dim_internal
    failures: List[str] = []

    normalization: Dict[str, float] = {}
    for j, label in enumerate(spec.labels):
        B = spec.transitions[j]
        effect = np.einsum("iba,ibc->ac", B.conj(), B)
        normalization[label] = op_norm(effect - identity(d))
        if normalization[label] > t.tol:
            failures.append(f"Σ_i B_{label}^i† B_{label}^i deviates from I by {normalization[label]:.3e}")

    hermitian: Dict[str, float] = {}
    psd: Dict[str, float] = {}
    traces: Dict[str, float] = {}
    for j, label in enumerate(spec.labels):
        rho = spec.rho[j]
        hermitian[label] = hermitian_residual(rho)
        psd[label] = max(0.0, -min_eigenvalue(rho))
        traces[label] = float(np.real(np.trace(rho)))
        if hermitian[label] > t.tol:
            failures.append(f"ρ_{label} is not Hermitian (residual {hermitian[label]:.3e})")
        if psd[label] > t.psd_tol:
            failures.append(f"ρ_{label} has a negative eigenvalue (−{psd[label]:.3e})")
        if traces[label] <= t.trace_floor:
            failures.append(f"ρ_{label} is zero (trace {traces[label]:.3e})")

    total_residual = abs(sum(traces.values()) - 1.0)
    if total_residual > t.tol:
        failures.append(f"Σ_j Tr ρ_j deviates from 1 by {total_residual:.3e}")

    omega_residual = None
    if spec.omega0 is not None:
        w = spec.omega0
        omega_residual = max(
            hermitian_residual(w),
            max(0.0, -min_eigenvalue(w)),
            abs(float(np.real(np.trace(w))) - 1.0),
        )
        if omega_residual > t.tol:
            failures.append(f"omega0 is not a unit-trace density operator (residual {omega_residual:.3e})")

    report = ValidationReport(
        passed=not failures,
        normalization_residuals=normalization,
        hermitian_residuals=hermitian,
        psd_residuals=psd,
        block_traces=traces,
        total_trace_residual=total_residual,
        omega0_residual=omega_residual,
        tolerance=t.tol,
        failures=failures,
    )
    logger.info(f"Walk: validation {'passed' if report.passed else 'failed'} ({len(failures)} failure(s))")
    return report


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Lifted jumps and the dense channel
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def lifted_jumps(spec: WalkSpec) -> List[LiftedJump]:
    n = spec.dim_position
    jumps = []
    for j, i in product(range(n), repeat=2):
        op = np.kron(spec.transitions[j, i], ketbra(i, j, n))
        op.setflags(write=False)
        jumps.append(LiftedJump(i=spec.labels[i], j=spec.labels[j], operator=op))
    return jumps


def dense_channel(spec: WalkSpec, state: ComplexMatrix) -> ComplexMatrix:
    """ρ ↦ Σ_{i,j} M_j^i ρ M_j^{i†} on H⊗K."""
    state = np.asarray(state, dtype=np.complex128)
    if state.shape != (spec.site_dim, spec.site_dim):
        raise DimensionMismatch(f"state must be {spec.site_dim}x{spec.site_dim}, got {state.shape}")
    out = np.zeros_like(state)
    for jump in lifted_jumps(spec):
        out += jump.operator @ state @ jump.operator.conj().T
    return out


def blocks_to_state(blocks: np.ndarray) -> ComplexMatrix:
    """Σ_i ρ_i ⊗ |i⟩⟨i|."""
    blocks = np.asarray(blocks, dtype=np.complex128)
    n, d, _ = blocks.shape
    state = np.zeros((d, n, d, n), dtype=np.complex128)
    for i in range(n):
        state[:, i, :, i] = blocks[i]
    return state.reshape(d * n, d * n)


def state_to_blocks(spec: WalkSpec, state: ComplexMatrix) -> np.ndarray:
    """Diagonal position blocks ⟨i|ρ|i⟩ of a state on H⊗K."""
    d, n = spec.dim_internal, spec.dim_position
    state = np.asarray(state, dtype=np.complex128)
    if state.shape != (d * n, d * n):
        raise DimensionMismatch(f"state must be {d * n}x{d * n}, got {state.shape}")
    t = state.reshape(d, n, d, n)
    return np.stack([t[:, i, :, i] for i in range(n)])


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Evolution and path distribution
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

def _check_blocks(spec: WalkSpec, blocks) -> np.ndarray:
    blocks = np.asarray(blocks, dtype=np.complex128)
    expected = (spec.dim_position, spec.dim_internal, spec.dim_internal)
    if blocks.shape != expected:
        raise DimensionMismatch(f"blocks must have shape {expected}, got {blocks.shape}", shape=blocks.shape)
    return blocks


def channel_step(spec: WalkSpec, blocks) -> np.ndarray:
    blocks = _check_blocks(spec, blocks)
    B = spec.transitions
    return np.einsum("jiab,jbc,jidc->iad", B, blocks, B.conj())


def evolve(spec: WalkSpec, steps: int, blocks=None) -> List[np.ndarray]:
    """[ρ^(0), ρ^(1), …, ρ^(steps)], starting from the walk's own blocks by default."""
    if steps < 0:
        raise InvalidParameter(f"steps must be >= 0, got {steps}")
    current = _check_blocks(spec, spec.rho if blocks is None else blocks)
    history = [current]
    for n in range(steps):
        current = channel_step(spec, current)
        history.append(current)
        logger.debug(f"Walk: step {n + 1} total trace {np.real(np.einsum('iaa->', current)):.15f}")
    return history


def _kraus_chain(spec: WalkSpec, path: Sequence[int]) -> ComplexMatrix:
    sigma = spec.rho[path[0]]
    for j, i in zip(path, path[1:]):
        b = spec.transitions[j, i]
        sigma = b @ sigma @ b.conj().T
    return sigma


def path_probability(spec: WalkSpec, path: Sequence[Label]) -> float:
    if len(path) == 0:
        raise InvalidParameter("a path needs at least its starting label")
    indices = [spec.index(label) for label in path]
    return float(np.real(np.trace(_kraus_chain(spec, indices))))


def total_variation(p: Mapping[Path, float], q: Mapping[Path, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(key, 0.0) - q.get(key, 0.0)) for key in keys)
