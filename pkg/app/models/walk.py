from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import Tolerances, get_settings
from app.core.errors import BadState, DimensionMismatch, UnknownLabel
from app.linalg.operators import ComplexMatrix, decode_matrix, encode_matrix, principal_sqrt

# A JSON matrix: rows of [re, im] pairs (bare reals are accepted too).
MatrixJSON = List[List[Union[Tuple[float, float], float]]]

Label = Union[str, int]


class WalkDocument(BaseModel):
    """
    Wire format of an open quantum random walk.

    B[j][i] is the transition operator B_j^i for the jump j → i; pairs left
    out are zero. rho[j] is the (unnormalized) initial block at label j.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    labels: List[str] = Field(..., min_length=1, description="Finite ordered label set Λ")
    dim_internal: int = Field(..., ge=1, description="Dimension of the internal space H")
    B: Dict[str, Dict[str, MatrixJSON]] = Field(..., description="B[j][i] = B_j^i, the operator of the jump j → i")
    rho: Dict[str, MatrixJSON] = Field(..., description="Initial density blocks ρ_j")
    omega0: Optional[MatrixJSON] = Field(None, description="Root state ω_o on H⊗K")
    k: int = Field(2, ge=1, description="Branching order of the tree")
    tolerances: Dict[str, float] = Field(default_factory=dict, description="Tolerance overrides")

    @field_validator("labels", mode="before")
    @classmethod
    def _labels_as_str(cls, v: Any) -> Any:
        if isinstance(v, list):
            return [str(x) for x in v]
        return v

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, v: Dict[str, float]) -> Dict[str, float]:
        Tolerances(**v)
        return v

    @model_validator(mode="after")
    def _labels_consistent(self) -> "WalkDocument":
        known = set(self.labels)
        if len(known) != len(self.labels):
            raise ValueError("labels must be distinct")
        for j, row in self.B.items():
            if j not in known:
                raise ValueError(f"B has unknown source label {j!r}")
            for i in row:
                if i not in known:
                    raise ValueError(f"B[{j!r}] has unknown target label {i!r}")
        missing = known - set(self.rho)
        extra = set(self.rho) - known
        if missing or extra:
            raise ValueError(f"rho must have exactly one block per label (missing {sorted(missing)}, unknown {sorted(extra)})")
        return self

    def to_spec(self) -> "WalkSpec":
        n, d = len(self.labels), self.dim_internal
        transitions = np.zeros((n, n, d, d), dtype=np.complex128)
        for j, row in self.B.items():
            for i, m in row.items():
                transitions[self.labels.index(j), self.labels.index(i)] = decode_matrix(m)
        rho = np.stack([decode_matrix(self.rho[label]) for label in self.labels])
        omega0 = decode_matrix(self.omega0) if self.omega0 is not None else None
        return WalkSpec(
            labels=tuple(self.labels),
            transitions=transitions,
            rho=rho,
            omega0=omega0,
            k=self.k,
            tolerance_overrides=dict(self.tolerances),
        )

    @classmethod
    def from_spec(cls, spec: "WalkSpec") -> "WalkDocument":
        return cls(
            labels=list(spec.labels),
            dim_internal=spec.dim_internal,
            B={
                j: {i: encode_matrix(spec.B(j, i)) for i in spec.labels}
                for j in spec.labels
            },
            rho={j: encode_matrix(spec.rho_block(j)) for j in spec.labels},
            omega0=encode_matrix(spec.omega0) if spec.omega0 is not None else None,
            k=spec.k,
            tolerances=dict(spec.tolerance_overrides),
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WalkSpec:
    """
    Immutable numerical form of a walk.

    transitions[j, i] holds B_j^i and rho[j] the block ρ_j, both indexed by
    label position. The site space is H⊗K with H first in kron order, so the
    position-basis vector |i⟩ of K is the last tensor factor.
    """

    labels: Tuple[str, ...]
    transitions: np.ndarray
    rho: np.ndarray
    omega0: Optional[np.ndarray] = None
    k: int = 2
    tolerance_overrides: Mapping[str, float] = field(default_factory=dict)
    pinned_tolerances: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        n = len(labels)
        if n == 0 or len(set(labels)) != n:
            raise DimensionMismatch("labels must be a non-empty set of distinct names")
        transitions = np.asarray(self.transitions, dtype=np.complex128)
        rho = np.asarray(self.rho, dtype=np.complex128)
        if transitions.ndim != 4 or transitions.shape[:2] != (n, n) or transitions.shape[2] != transitions.shape[3]:
            raise DimensionMismatch(f"transitions must have shape ({n}, {n}, d, d), got {transitions.shape}")
        d = transitions.shape[2]
        if rho.shape != (n, d, d):
            raise DimensionMismatch(f"rho must have shape ({n}, {d}, {d}), got {rho.shape}")
        object.__setattr__(self, "transitions", _frozen(transitions))
        object.__setattr__(self, "rho", _frozen(rho))
        if self.omega0 is not None:
            omega0 = np.asarray(self.omega0, dtype=np.complex128)
            if omega0.shape != (n * d, n * d):
                raise DimensionMismatch(f"omega0 must be {n * d}x{n * d}, got {omega0.shape}")
            object.__setattr__(self, "omega0", _frozen(omega0))
        object.__setattr__(self, "tolerance_overrides", dict(self.tolerance_overrides))
        object.__setattr__(self, "pinned_tolerances", dict(self.pinned_tolerances))

    # ── shapes ──────────────────────────────────────

    @property
    def dim_internal(self) -> int:
        return self.transitions.shape[2]

    @property
    def dim_position(self) -> int:
        return len(self.labels)

    @property
    def site_dim(self) -> int:
        return self.dim_internal * self.dim_position

    # ── lookup ──────────────────────────────────────

    def index(self, label: Label) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise UnknownLabel(f"unknown label {label!r}; known labels are {list(self.labels)}", label=str(label))

    def B(self, j: Label, i: Label) -> ComplexMatrix:
        """B_j^i, the operator of the jump j → i."""
        return self.transitions[self.index(j), self.index(i)]

    def rho_block(self, j: Label) -> ComplexMatrix:
        return self.rho[self.index(j)]

    @cached_property
    def rho_traces(self) -> np.ndarray:
        return np.real(np.einsum("jaa->j", self.rho))

    @cached_property
    def normalized_sqrt_rho(self) -> np.ndarray:
        """ρ_j^{1/2} / Tr(ρ_j)^{1/2} for every label; raises BadState on a zero block."""
        t = self.tolerances()
        floor = t.trace_floor
        roots = []
        for j, label in enumerate(self.labels):
            tr = self.rho_traces[j]
            if tr <= floor:
                raise BadState(f"initial block at label {label!r} is zero (trace {tr:.3e})", label=label)
            roots.append(principal_sqrt(self.rho[j], t) / np.sqrt(tr))
        return _frozen(np.stack(roots))

    def with_rho(self, rho: Union[np.ndarray, Sequence[ComplexMatrix]]) -> "WalkSpec":
        return WalkSpec(self.labels, self.transitions, np.asarray(rho), self.omega0, self.k, self.tolerance_overrides, self.pinned_tolerances)

    def with_omega0(self, omega0: Optional[np.ndarray]) -> "WalkSpec":
        return WalkSpec(self.labels, self.transitions, self.rho, omega0, self.k, self.tolerance_overrides, self.pinned_tolerances)

    def tolerances(self) -> Tolerances:
        """Settings defaults overlaid with this walk's own overrides; pinned values win over the environment."""
        return get_settings().tolerances(self.tolerance_overrides, pinned=self.pinned_tolerances)
