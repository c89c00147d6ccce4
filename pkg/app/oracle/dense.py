"""
Brute-force nested conditional expectation on a finite ball.

An operator on Λ_n is held as a tensor with one row axis and one column axis
per vertex. Leaves are closed with the interaction against identity children;
then each level, from the deepest up to the root, is multiplied by the dense
interaction K on the left and K† on the right and its children are traced
out. Nothing here uses the factorized formulas.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from app.core.config import get_settings
from app.core.errors import DimensionMismatch, SizeOverflow
from app.core.logger import logger
from app.linalg.operators import ComplexMatrix
from app.models.observables import Observable, ObservableSum, ProductObservable
from app.models.walk import WalkSpec
from app.qmc.markov import KrausInteraction
from app.tree.geometry import TreeShape, Vertex, ball, level, successors


@dataclass(frozen=True)
class DenseScope:
    k: int
    depth: int
    site_dim: int
    cap: Optional[int] = None
    vertices: List[Vertex] = field(init=False, compare=False)

    def __post_init__(self):
        cap = self.cap if self.cap is not None else get_settings().dense_cap
        size = sum(self.k ** m for m in range(self.depth + 1))
        total = self.site_dim ** size
        if total > cap:
            raise SizeOverflow(
                f"Λ_{self.depth} of a k={self.k} tree with site dimension {self.site_dim} needs dimension {total} (cap {cap})",
                size=total,
                cap=cap,
            )
        object.__setattr__(self, "cap", cap)
        object.__setattr__(self, "vertices", ball(self.depth, TreeShape(self.k)))

    @property
    def total_dim(self) -> int:
        return self.site_dim ** len(self.vertices)


def dense_product(obs: Observable, scope: DenseScope) -> ComplexMatrix:
    shape = TreeShape(scope.k)
    products = [obs] if isinstance(obs, ProductObservable) else [o for _, o in obs]
    for o in products:
        for v in o.support:
            shape.check_vertex(v)
    return obs.dense(scope.vertices)


def _left(t: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract op's input axes with `axes` of t and put its outputs back in their place."""
    r = len(axes)
    out = np.tensordot(op, t, axes=(list(range(r, 2 * r)), list(axes)))
    return np.moveaxis(out, list(range(r)), list(axes))


def _right(t: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """t ↦ t·op† over the column `axes`."""
    r = len(axes)
    out = np.tensordot(t, op.conj(), axes=(list(axes), list(range(r, 2 * r))))
    return np.moveaxis(out, list(range(out.ndim - r, out.ndim)), list(axes))


def _trace(t: np.ndarray, positions: Sequence[int], n_sites: int) -> np.ndarray:
    sub = list(range(2 * n_sites))
    for p in positions:
        sub[n_sites + p] = sub[p]
    keep = [i for i in range(n_sites) if i not in positions]
    return np.einsum(t, sub, keep + [n_sites + i for i in keep])


def nested_conditional(
    spec: WalkSpec,
    scope: DenseScope,
    a: Union[ComplexMatrix, Observable],
) -> ComplexMatrix:
    if scope.site_dim != spec.site_dim:
        raise DimensionMismatch(f"scope site dimension {scope.site_dim} differs from the walk's {spec.site_dim}")
    if isinstance(a, (ProductObservable, ObservableSum)):
        a = dense_product(a, scope)
    a = np.asarray(a, dtype=np.complex128)
    if a.shape != (scope.total_dim, scope.total_dim):
        raise DimensionMismatch(f"operator must be {scope.total_dim}x{scope.total_dim}, got {a.shape}")

    D, k = spec.site_dim, scope.k
    K = KrausInteraction(spec, k).dense(scope.cap)
    K_t = K.reshape((D,) * (2 * (1 + k)))
    K6 = K.reshape(D, D ** k, D, D ** k)
    leaf_map = np.einsum("aecf,bedf->abcd", K6, K6.conj())

    order: List[Vertex] = list(scope.vertices)
    n_sites = len(order)
    t = a.reshape((D,) * (2 * n_sites))
    shape = TreeShape(k)

    for v in level(scope.depth, shape):
        p = order.index(v)
        t = np.moveaxis(np.tensordot(leaf_map, t, axes=([2, 3], [p, n_sites + p])), [0, 1], [p, n_sites + p])

    for m in range(scope.depth - 1, -1, -1):
        for u in level(m, shape):
            group = [order.index(u)] + [order.index(c) for c in successors(u, shape)]
            t = _left(t, K_t, group)
            t = _right(t, K_t, [n_sites + p for p in group])
            children = group[1:]
            t = _trace(t, children, n_sites)
            order = [v for i, v in enumerate(order) if i not in children]
            n_sites = len(order)
        logger.debug(f"Oracle: collapsed level {m + 1}, {n_sites} site(s) left")

    return t.reshape(D, D)
