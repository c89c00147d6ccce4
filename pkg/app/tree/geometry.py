"""
Semi-infinite Cayley tree of order k.

A vertex is the word of branch indices leading to it from the root; the root
is the empty word. Level n holds the k^n words of length n in lexicographic
order, and the shift by g prepends g to a word.
"""

from dataclasses import dataclass, field
from itertools import islice, product
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import get_settings
from app.core.errors import InvalidParameter, SizeOverflow

Vertex = Tuple[int, ...]
ROOT: Vertex = ()


@dataclass(frozen=True)
class TreeShape:
    k: int

    def __post_init__(self):
        if int(self.k) < 1:
            raise InvalidParameter(f"branching order must be >= 1, got {self.k}", k=self.k)

    def check_vertex(self, v: Sequence[int]) -> Vertex:
        word = tuple(int(i) for i in v)
        bad = [i for i in word if not 1 <= i <= self.k]
        if bad:
            raise InvalidParameter(f"vertex {list(word)} has branch indices outside 1..{self.k}", vertex=list(word))
        return word


def depth(v: Vertex) -> int:
    return len(v)


def parent(v: Vertex) -> Vertex:
    if not v:
        raise InvalidParameter("the root has no parent")
    return v[:-1]


def level(n: int, shape: TreeShape, cap: Optional[int] = None) -> List[Vertex]:
    """W_n: all k^n words of length n, lexicographically ordered."""
    if n < 0:
        raise InvalidParameter(f"level index must be >= 0, got {n}", n=n)
    cap = cap if cap is not None else get_settings().level_cap
    size = shape.k ** n
    if size > cap:
        raise SizeOverflow(f"level {n} of a k={shape.k} tree has {size} vertices (cap {cap})", size=size, cap=cap)
    return [tuple(w) for w in product(range(1, shape.k + 1), repeat=n)]


def ball(n: int, shape: TreeShape, cap: Optional[int] = None) -> List[Vertex]:
    """Λ_n: levels 0..n concatenated."""
    if n < 0:
        raise InvalidParameter(f"ball radius must be >= 0, got {n}", n=n)
    cap = cap if cap is not None else get_settings().level_cap
    size = sum(shape.k ** m for m in range(n + 1))
    if size > cap:
        raise SizeOverflow(f"ball of radius {n} has {size} vertices (cap {cap})", size=size, cap=cap)
    vertices: List[Vertex] = []
    for m in range(n + 1):
        vertices.extend(level(m, shape, cap))
    return vertices


def successors(v: Sequence[int], shape: TreeShape) -> List[Vertex]:
    word = shape.check_vertex(v)
    return [word + (i,) for i in range(1, shape.k + 1)]


def shift(g: Sequence[int], v: Sequence[int]) -> Vertex:
    return tuple(int(i) for i in g) + tuple(int(i) for i in v)


@dataclass(frozen=True)
class Ray:
    """
    Eventually periodic root-to-infinity path: the direction stream is
    `prefix` followed by `period` repeated forever. The default is the
    all-1 ray.
    """

    prefix: Tuple[int, ...] = ()
    period: Tuple[int, ...] = field(default=(1,))

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(i) for i in self.prefix))
        object.__setattr__(self, "period", tuple(int(i) for i in self.period))
        if not self.period:
            raise InvalidParameter("ray period must be non-empty")
        if any(i < 1 for i in self.prefix + self.period):
            raise InvalidParameter("ray directions are branch indices >= 1")

    def directions(self) -> Iterator[int]:
        yield from self.prefix
        while True:
            yield from self.period

    def vertex(self, n: int) -> Vertex:
        """u_n, the length-n prefix of the direction stream."""
        if n < 0:
            raise InvalidParameter(f"ray index must be >= 0, got {n}")
        return tuple(islice(self.directions(), n))

    def vertices(self, n: int) -> List[Vertex]:
        """u_0, ..., u_n."""
        word = self.vertex(n)
        return [word[:m] for m in range(n + 1)]

    def check(self, shape: TreeShape) -> "Ray":
        shape.check_vertex(self.prefix + self.period)
        return self

    @classmethod
    def parse(cls, text: str) -> "Ray":
        """'2,1;1,2' → prefix (2,1) then (1,2) repeated. Without ';' the word is the period."""
        head, sep, tail = text.partition(";")
        try:
            prefix = tuple(int(x) for x in head.split(",") if x.strip())
            period = tuple(int(x) for x in tail.split(",") if x.strip())
        except ValueError as e:
            raise InvalidParameter(f"cannot parse ray {text!r}: {e}")
        if not sep:
            return cls(prefix=(), period=prefix or (1,))
        return cls(prefix=prefix, period=period or (1,))

    @classmethod
    def random(cls, shape: TreeShape, rng: np.random.Generator, max_prefix: int = 4, max_period: int = 3) -> "Ray":
        prefix = tuple(int(x) for x in rng.integers(1, shape.k + 1, size=rng.integers(0, max_prefix + 1)))
        period = tuple(int(x) for x in rng.integers(1, shape.k + 1, size=rng.integers(1, max_period + 1)))
        return cls(prefix=prefix, period=period)
