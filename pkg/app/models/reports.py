from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class Verdict(str, Enum):
    RECURRENT = "Recurrent"
    NOT_RECURRENT = "NotRecurrent"
    INCONCLUSIVE = "Inconclusive"


class Criterion(str, Enum):
    SUFFICIENT_BOUND = "SufficientBound"
    EXACT_TAIL_LIMIT = "ExactTailLimit"


class Access(str, Enum):
    ACCESSIBLE = "Accessible"
    NOT_ACCESSIBLE = "NotAccessible"
    INCONCLUSIVE = "Inconclusive"


class Level(str, Enum):
    """Operator level (conditional expectation) or state level."""

    E = "E"
    PHI = "phi"


class _Report(BaseModel):
    model_config = ConfigDict(populate_by_name=True, use_enum_values=False)

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


class ValidationReport(_Report):
    passed: bool = Field(..., description="True iff every residual is within tolerance")
    normalization_residuals: Dict[str, float] = Field(..., description="‖Σ_i B_j^{i†}B_j^i − I‖ per source label j")
    hermitian_residuals: Dict[str, float] = Field(..., description="max |ρ_j − ρ_j†| per label")
    psd_residuals: Dict[str, float] = Field(..., description="max(0, −λ_min(ρ_j)) per label")
    block_traces: Dict[str, float] = Field(..., description="Tr ρ_j per label")
    total_trace_residual: float = Field(..., description="|Σ_j Tr ρ_j − 1|")
    omega0_residual: Optional[float] = Field(None, description="Distance of ω_o from a unit-trace density operator")
    tolerance: float
    failures: List[str] = Field(default_factory=list, description="Human-readable list of violated conditions")


class RecurrenceReport(_Report):
    level: Level
    verdict: Verdict
    criterion: Criterion
    bound_p: float = Field(..., alias="p", description="max_j ψ_j(e^⊥)")
    psi: Dict[str, float] = Field(..., description="ψ_j(e^⊥) per label")
    saturated_labels: List[str] = Field(..., description="Labels with ψ_j(e^⊥) within one_tol of 1")
    tail_limit: List[List[List[float]]] = Field(..., description="lim_n E_o](τ_{e;∞}) as an [re, im] matrix")
    residual_operator: List[List[List[float]]] = Field(..., description="E(e ⊗ tail limit; I, …, I)")
    residual_norm: float = Field(..., description="‖residual operator‖")
    value: Optional[float] = Field(None, description="State-level quantity |Tr(ω_o · residual)| (φ level only)")
    normalizer: float = Field(..., description="Tr E(e⊗I) at E level, φ(α_o(e)) at φ level")
    ray: List[int] = Field(default_factory=list, description="First vertices' directions of the ray used for the consistency check")
    ray_consistency_residual: float = Field(..., description="‖E_o] on the explicit tail observable − factored tail‖")
    tolerances: Dict[str, float]


class AccessibilityStep(BaseModel):
    m: int
    value: float = Field(..., description="r_m (E level) or |s_m| (φ level)")
    cross_check_residual: float = Field(..., description="Distance to the factored evaluation on {o: e, x_m: f}")


class AccessibilityReport(_Report):
    level: Level
    verdict: Access
    accessible: bool
    first_m: Optional[int] = Field(None, description="Smallest m with a value above the inconclusive band")
    per_m: List[AccessibilityStep]
    collapse_observed: bool = Field(..., description="b_m constant for m ≥ 2")
    tolerances: Dict[str, float]


class CompleteAccessibilityReport(_Report):
    level: Level
    verdict: Access
    value: float = Field(..., description="‖tail limit‖ (E level) or |Tr(ω_o · tail limit)| (φ level)")
    tail_limit: List[List[List[float]]]
    psi: Dict[str, float]
    tolerances: Dict[str, float]


class ExampleCheck(BaseModel):
    name: str
    expected: str
    observed: str
    passed: bool


class ExampleResult(_Report):
    name: str
    passed: bool
    checks: List[ExampleCheck]
