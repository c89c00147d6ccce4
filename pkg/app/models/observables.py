"""
Finitely supported observables on the tree.

A ProductObservable is an elementary tensor: a site operator at each vertex
of its support and the identity everywhere else. An ObservableSum is a finite
linear combination of them; every functional in app.qmc is linear and is
extended to sums term by term.
"""

from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple, Union

import numpy as np

from app.core.errors import DimensionMismatch, InvalidParameter
from app.linalg.operators import ComplexMatrix, as_square, decode_complex, decode_matrix, encode_complex, encode_matrix, identity
from app.tree.geometry import Vertex, shift


def _vertex_order(v: Vertex) -> Tuple[int, Vertex]:
    return (len(v), v)


@dataclass(frozen=True, eq=False)
class ProductObservable:
    """a = ⊗_u a_u with a_u = I off `factors`."""

    factors: Mapping[Vertex, ComplexMatrix]
    site_dim: int

    def __init__(self, factors: Mapping[Sequence[int], Any], site_dim: int):
        frozen: Dict[Vertex, ComplexMatrix] = {}
        for v, m in factors.items():
            word = tuple(int(i) for i in v)
            if word in frozen:
                raise InvalidParameter(f"vertex {list(word)} given twice")
            a = np.array(as_square(m), copy=True)
            if a.shape != (site_dim, site_dim):
                raise DimensionMismatch(
                    f"factor at {list(word)} is {a.shape[0]}x{a.shape[1]}, site dimension is {site_dim}",
                    vertex=list(word),
                )
            a.setflags(write=False)
            frozen[word] = a
        object.__setattr__(self, "factors", MappingProxyType(dict(sorted(frozen.items(), key=lambda kv: _vertex_order(kv[0])))))
        object.__setattr__(self, "site_dim", int(site_dim))

    @classmethod
    def identity(cls, site_dim: int) -> "ProductObservable":
        return cls({}, site_dim)

    @classmethod
    def single(cls, vertex: Sequence[int], operator: ComplexMatrix) -> "ProductObservable":
        m = as_square(operator)
        return cls({tuple(vertex): m}, m.shape[0])

    @property
    def support(self) -> List[Vertex]:
        return list(self.factors)

    @property
    def depth(self) -> int:
        return max((len(v) for v in self.factors), default=0)

    def at(self, v: Sequence[int]) -> ComplexMatrix:
        word = tuple(v)
        if word in self.factors:
            return self.factors[word]
        return identity(self.site_dim)

    def shifted(self, g: Sequence[int]) -> "ProductObservable":
        """α_g(a): every factor moved from u to g·u."""
        return ProductObservable({shift(g, v): m for v, m in self.factors.items()}, self.site_dim)

    def times(self, other: "ProductObservable") -> "ProductObservable":
        """Site-wise product a·b."""
        if other.site_dim != self.site_dim:
            raise DimensionMismatch("observables live on different site dimensions")
        vertices = set(self.factors) | set(other.factors)
        return ProductObservable({v: self.at(v) @ other.at(v) for v in vertices}, self.site_dim)

    def dense(self, vertices: Sequence[Vertex]) -> ComplexMatrix:
        """Kronecker product of the factors over `vertices`, in that order."""
        outside = set(self.factors) - set(tuple(v) for v in vertices)
        if outside:
            raise InvalidParameter(f"support vertices {sorted(outside)} are outside the requested region")
        result = np.ones((1, 1), dtype=np.complex128)
        for v in vertices:
            result = np.kron(result, self.at(v))
        return result

    def to_json(self) -> List[Dict[str, Any]]:
        return [{"vertex": list(v), "matrix": encode_matrix(m)} for v, m in self.factors.items()]

    @classmethod
    def from_json(cls, items: Iterable[Mapping[str, Any]], site_dim: int) -> "ProductObservable":
        return cls({tuple(item["vertex"]): decode_matrix(item["matrix"]) for item in items}, site_dim)

    def __repr__(self) -> str:
        return f"ProductObservable(support={self.support}, site_dim={self.site_dim})"


Term = Tuple[complex, ProductObservable]


@dataclass(frozen=True, eq=False)
class ObservableSum:
    terms: Tuple[Term, ...]
    site_dim: int

    def __init__(self, terms: Iterable[Union[Term, ProductObservable]], site_dim: int = None):
        collected: List[Term] = []
        for t in terms:
            coeff, obs = (1.0, t) if isinstance(t, ProductObservable) else t
            collected.append((complex(coeff), obs))
        dims = {obs.site_dim for _, obs in collected}
        if site_dim is not None:
            dims.add(int(site_dim))
        if len(dims) != 1:
            raise DimensionMismatch(f"terms disagree on the site dimension: {sorted(dims)}")
        object.__setattr__(self, "terms", tuple(collected))
        object.__setattr__(self, "site_dim", dims.pop())

    def __iter__(self) -> Iterator[Term]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: Union["ObservableSum", ProductObservable]) -> "ObservableSum":
        extra = other.terms if isinstance(other, ObservableSum) else ((1.0, other),)
        return ObservableSum(self.terms + tuple(extra), self.site_dim)

    def scaled(self, c: complex) -> "ObservableSum":
        return ObservableSum([(c * coeff, obs) for coeff, obs in self.terms], self.site_dim)

    def shifted(self, g: Sequence[int]) -> "ObservableSum":
        return ObservableSum([(coeff, obs.shifted(g)) for coeff, obs in self.terms], self.site_dim)

    def dense(self, vertices: Sequence[Vertex]) -> ComplexMatrix:
        total = self.site_dim ** len(vertices)
        result = np.zeros((total, total), dtype=np.complex128)
        for coeff, obs in self.terms:
            result += coeff * obs.dense(vertices)
        return result

    def to_json(self) -> List[Dict[str, Any]]:
        return [{"coefficient": encode_complex(c), "factors": obs.to_json()} for c, obs in self.terms]

    @classmethod
    def from_json(cls, items: Iterable[Mapping[str, Any]], site_dim: int) -> "ObservableSum":
        return cls(
            [(decode_complex(item.get("coefficient", 1.0)), ProductObservable.from_json(item["factors"], site_dim)) for item in items],
            site_dim,
        )


Observable = Union[ProductObservable, ObservableSum]


def as_sum(a: Observable) -> ObservableSum:
    return a if isinstance(a, ObservableSum) else ObservableSum([a])
