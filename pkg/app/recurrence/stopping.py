"""
Stopping-time projections along a ray.

    hit(n)  = e^⊥ at u_0..u_{n-1}, e at u_n      (first visit of e at step n)
    tail(n) = e^⊥ at u_0..u_n                    (no visit up to step n)

Summing hit(0..N) and tail(N) gives the identity observable.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from app.core.config import Tolerances
from app.core.errors import InvalidParameter
from app.linalg.operators import ComplexMatrix, check_projection, complement
from app.models.observables import ObservableSum, ProductObservable
from app.models.walk import WalkSpec
from app.qmc.functionals import psi_vector
from app.qmc.markov import assemble_diagonal, mj_blocks
from app.tree.geometry import Ray


@dataclass(frozen=True, eq=False)
class StoppingTime:
    e: ComplexMatrix
    ray: Ray = Ray()

    def __post_init__(self):
        e = np.array(check_projection(self.e), copy=True)
        e.setflags(write=False)
        object.__setattr__(self, "e", e)

    @property
    def site_dim(self) -> int:
        return self.e.shape[0]

    @property
    def e_perp(self) -> ComplexMatrix:
        return complement(self.e)

    def hit(self, n: int) -> ProductObservable:
        if n < 0:
            raise InvalidParameter(f"step must be >= 0, got {n}")
        vertices = self.ray.vertices(n)
        factors = {v: self.e_perp for v in vertices[:-1]}
        factors[vertices[-1]] = self.e
        return ProductObservable(factors, self.site_dim)

    def tail(self, n: int) -> ProductObservable:
        if n < 0:
            raise InvalidParameter(f"step must be >= 0, got {n}")
        return ProductObservable({v: self.e_perp for v in self.ray.vertices(n)}, self.site_dim)

    def truncation(self, n: int) -> ObservableSum:
        """Σ_{m ≤ n} hit(m) + tail(n)."""
        return ObservableSum([self.hit(m) for m in range(n + 1)] + [self.tail(n)], self.site_dim)


def stopping_time(e: ComplexMatrix, ray: Ray, n: int) -> ProductObservable:
    return StoppingTime(e, ray).hit(n)


def tail_conditional(spec: WalkSpec, e: ComplexMatrix, n: int, tolerances: Optional[Tolerances] = None) -> ComplexMatrix:
    """E_o](tail(n)) = Σ_j M_j(e^⊥) ψ_j(e^⊥)^n; the same on every ray."""
    if n < 0:
        raise InvalidParameter(f"step must be >= 0, got {n}")
    t = tolerances or spec.tolerances()
    e_perp = complement(check_projection(e, t))
    weights = psi_vector(spec, e_perp) ** n
    return assemble_diagonal(spec, weights[:, None, None] * mj_blocks(spec, e_perp))
