"""
Runtime configuration.

Settings come from the environment (prefix QMC_TREE_) or a local .env file;
numerical thresholds live in the Tolerances model so they can also be
overridden per walk document and per run.

    QMC_TREE_TOLERANCE        → overrides Tolerances.zero_tol
    QMC_TREE_LOG_LEVEL        → loguru level (default INFO)
    QMC_TREE_LEVEL_CAP        → max vertices enumerated per tree level
    QMC_TREE_DENSE_CAP        → max total dimension of dense oracle operators
    QMC_TREE_ENUMERATION_CAP  → max number of enumerated walk paths
    QMC_TREE_SAMPLER_WORKERS  → threads used by the trajectory sampler
    QMC_TREE_SAMPLER_SHARD_SIZE → trajectories per independent RNG stream
"""

from functools import lru_cache
from typing import Any, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Tolerances(BaseModel):
    """Declared numerical thresholds for every exact "= 0" / "= 1" test."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    psd_tol: float = Field(1e-10, gt=0, description="Smallest eigenvalue still accepted as PSD is -psd_tol")
    tol: float = Field(1e-9, gt=0, description="Equality tolerance for operator-norm comparisons")
    zero_tol: float = Field(1e-9, gt=0, description="Norm / modulus below which a verdict quantity reads as 0")
    one_tol: float = Field(1e-9, gt=0, description="Distance from 1 below which psi_j(e^perp) counts as 1")
    sqrt_tol: float = Field(1e-10, gt=0, description="Allowed |S^2 - rho| for principal square roots")
    trace_floor: float = Field(1e-14, gt=0, description="Traces at or below this are treated as zero")
    inconclusive_factor: float = Field(10.0, ge=1, description="Upper edge of the Inconclusive band, in units of zero_tol")

    def merged(self, overrides: Optional[Mapping[str, Any]]) -> "Tolerances":
        if not overrides:
            return self
        return Tolerances(**{**self.model_dump(), **dict(overrides)})

    @property
    def inconclusive_upper(self) -> float:
        return self.zero_tol * self.inconclusive_factor


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="QMC_TREE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    tolerance: Optional[float] = Field(None, gt=0)
    log_level: str = "INFO"
    level_cap: int = Field(1_000_000, ge=1)
    dense_cap: int = Field(4096, ge=1)
    enumeration_cap: int = Field(1_000_000, ge=1)
    sampler_workers: int = Field(4, ge=1)
    sampler_shard_size: int = Field(65_536, ge=1)

    def tolerances(self, *overrides: Optional[Mapping[str, Any]], pinned: Optional[Mapping[str, Any]] = None) -> Tolerances:
        """Defaults, then each override mapping in order, then QMC_TREE_TOLERANCE, then `pinned`."""
        tolerances = Tolerances()
        for layer in overrides:
            tolerances = tolerances.merged(layer)
        if self.tolerance is not None:
            tolerances = tolerances.merged({"zero_tol": self.tolerance})
        return tolerances.merged(pinned)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()


def resolve_tolerances(tolerances: Optional[Tolerances]) -> Tolerances:
    return tolerances if tolerances is not None else get_settings().tolerances()
