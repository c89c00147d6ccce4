"""
Run configuration for the command-line front-end.

A run config is a JSON document validated by RunConfig. The walk may be
inlined under "walk" or referenced by path under "walk_file". CLI flags
override the matching fields after loading.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.errors import DimensionMismatch, UsageError
from app.linalg.operators import ComplexMatrix, check_projection, complement, decode_complex, decode_matrix, projector, rank1_projection
from app.models.walk import MatrixJSON, WalkDocument, WalkSpec
from app.tree.geometry import Ray

ComplexJSON = Union[Tuple[float, float], float]


class ProjectionSpec(BaseModel):
    """
    A site projection, either as a full matrix on H⊗K or as a product
    h ⊗ |ξ⟩⟨ξ| where h is an explicit internal matrix or the rank-1
    projection with parameters (eps, z). `complement` replaces the result
    by I − result.
    """

    model_config = ConfigDict(extra="forbid")

    matrix: Optional[MatrixJSON] = Field(None, description="Full site operator")
    internal: Optional[MatrixJSON] = Field(None, description="Internal factor h")
    eps: Optional[float] = Field(None, ge=0, le=1, description="Rank-1 parameter ε")
    z: ComplexJSON = Field(1.0, description="Unit-modulus phase of the rank-1 projection")
    xi: Optional[List[ComplexJSON]] = Field(None, description="Unit vector in the position space")
    complement: bool = Field(False, description="Use I minus the described projection")

    @model_validator(mode="after")
    def _one_form(self) -> "ProjectionSpec":
        if self.matrix is not None:
            if self.internal is not None or self.eps is not None or self.xi is not None:
                raise ValueError("give either 'matrix' or a product form, not both")
            return self
        if (self.internal is None) == (self.eps is None):
            raise ValueError("a product form needs exactly one of 'internal' or 'eps'")
        if self.xi is None:
            raise ValueError("a product form needs the position vector 'xi'")
        return self

    def build(self, spec: WalkSpec) -> ComplexMatrix:
        t = spec.tolerances()
        if self.matrix is not None:
            m = decode_matrix(self.matrix)
        else:
            h = decode_matrix(self.internal) if self.internal is not None else rank1_projection(self.eps, decode_complex(self.z), t)
            xi = np.array([decode_complex(x) for x in self.xi])
            if h.shape != (spec.dim_internal, spec.dim_internal) or xi.shape != (spec.dim_position,):
                raise DimensionMismatch(
                    f"projection factors {h.shape} and {xi.shape} do not fit H = C^{spec.dim_internal}, K = C^{spec.dim_position}"
                )
            m = np.kron(h, projector(xi, t))
        if m.shape != (spec.site_dim, spec.site_dim):
            raise DimensionMismatch(f"projection must be {spec.site_dim}x{spec.site_dim}, got {m.shape}")
        m = check_projection(m, t)
        return complement(m) if self.complement else m


class RaySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    prefix: List[int] = Field(default_factory=list)
    period: List[int] = Field(default_factory=lambda: [1], min_length=1)

    def build(self) -> Ray:
        return Ray(prefix=tuple(self.prefix), period=tuple(self.period))


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    walk: Optional[WalkDocument] = Field(None, description="Inline walk document")
    walk_file: Optional[str] = Field(None, description="Path to a walk document, relative to the config file")
    k: Optional[int] = Field(None, ge=1, description="Branching order override")
    tolerances: Dict[str, float] = Field(default_factory=dict, description="Run-level tolerance overrides")
    steps: int = Field(1, ge=0, description="Channel iterations for `step`")
    length: int = Field(1, ge=0, description="Path length for `pathdist` and `sample`")
    count: int = Field(100_000, ge=1, description="Trajectories for `sample`")
    seed: int = Field(0, ge=0, description="Sampler seed")
    projection: Optional[ProjectionSpec] = Field(None, description="Projection for `recurrence`")
    e: Optional[ProjectionSpec] = Field(None, description="Starting projection for `accessibility`")
    f: Optional[ProjectionSpec] = Field(None, description="Target projection for `accessibility`")
    max_m: int = Field(8, ge=1, description="Largest depth m tried by `accessibility`")
    omega0: Optional[MatrixJSON] = Field(None, description="Root state; overrides the walk's omega0")
    ray: Optional[RaySpec] = Field(None, description="Ray used for consistency checks")

    @model_validator(mode="after")
    def _walk_source(self) -> "RunConfig":
        if self.walk is not None and self.walk_file is not None:
            raise ValueError("give either 'walk' or 'walk_file', not both")
        return self


def read_json(path: Union[str, Path]) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_run_config(path: Optional[str]) -> Tuple[RunConfig, Optional[Path]]:
    if path is None:
        return RunConfig(), None
    return RunConfig.model_validate(read_json(path)), Path(path).resolve().parent


def load_walk(
    config: RunConfig,
    base: Optional[Path],
    walk_path: Optional[str] = None,
    pinned: Optional[Dict[str, float]] = None,
) -> WalkSpec:
    """Walk from --walk, then walk_file, then the inline document; run-level k and tolerances applied on top.

    `pinned` tolerances (the --tolerance flag) outrank QMC_TREE_TOLERANCE.
    """
    if walk_path is not None:
        doc = WalkDocument.model_validate(read_json(walk_path))
    elif config.walk_file is not None:
        p = Path(config.walk_file)
        doc = WalkDocument.model_validate(read_json(p if p.is_absolute() or base is None else base / p))
    elif config.walk is not None:
        doc = config.walk
    else:
        raise UsageError("no walk given: use --walk, 'walk' or 'walk_file'")
    spec = doc.to_spec()
    overrides = {**spec.tolerance_overrides, **config.tolerances}
    omega0 = decode_matrix(config.omega0) if config.omega0 is not None else spec.omega0
    return WalkSpec(spec.labels, spec.transitions, spec.rho, omega0, config.k or spec.k, overrides, pinned or {})
