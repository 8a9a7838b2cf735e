"""Directed graphs on dense vertex sets, circulant and Paley builders."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q % 2 == 0:
        return q == 2
    d = 3
    while d * d <= q:
        if q % d == 0:
            return False
        d += 2
    return True


def prime_power(n: int) -> tuple[int, int] | None:
    """Return ``(p, k)`` with ``n == p**k`` and ``k >= 1``, or ``None``."""
    if n < 2:
        return None
    p = 2
    while p * p <= n and n % p:
        p += 1
    if n % p:
        p = n
    k, m = 0, n
    while m % p == 0:
        m //= p
        k += 1
    return (p, k) if m == 1 else None


@dataclass(frozen=True)
class Graph:
    """A directed graph on ``{0..n-1}``; loops are allowed, multi-arcs are not."""

    n: int
    arcs: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"vertex count must be a positive integer, got {self.n!r}")
        arcs = frozenset((int(u), int(v)) for u, v in self.arcs)
        for u, v in arcs:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"arc ({u}, {v}) has an endpoint outside [0, {self.n})")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "arcs", arcs)

    @classmethod
    def from_adjacency(cls, adj) -> Graph:
        a = np.asarray(adj, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency matrix must be square")
        us, vs = np.nonzero(a)
        return cls(a.shape[0], frozenset(zip(us.tolist(), vs.tolist())))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> Graph:
        """Undirected graph: each edge contributes both arcs."""
        arcs = set()
        for u, v in edges:
            arcs.add((u, v))
            arcs.add((v, u))
        return cls(n, frozenset(arcs))

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=bool)
        if self.arcs:
            idx = np.array(sorted(self.arcs), dtype=np.int64)
            a[idx[:, 0], idx[:, 1]] = True
        a.flags.writeable = False
        return a

    def sorted_arcs(self) -> list[tuple[int, int]]:
        return sorted(self.arcs)

    @property
    def is_undirected(self) -> bool:
        a = self.adjacency
        return bool((a == a.T).all())

    def out_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def in_degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=0)

    def complement(self) -> Graph:
        """Loopless complement (loops of the input are dropped)."""
        a = ~self.adjacency
        np.fill_diagonal(a, False)
        return Graph.from_adjacency(a)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, arcs={len(self.arcs)})"


@dataclass(frozen=True)
class ConnectionSet:
    """Connection set of a Cayley graph over ``Z_modulus``."""

    modulus: int
    elements: frozenset

    def __post_init__(self):
        if self.modulus < 2:
            raise ValueError(f"modulus must be at least 2, got {self.modulus}")
        elems = frozenset(int(s) % self.modulus for s in self.elements)
        object.__setattr__(self, "elements", elems)

    @property
    def is_symmetric(self) -> bool:
        return self.elements == frozenset((-s) % self.modulus for s in self.elements)

    def scaled(self, m: int) -> ConnectionSet:
        return ConnectionSet(self.modulus, frozenset(m * s for s in self.elements))

    def spec(self) -> str:
        return f"circ:{self.modulus}:" + ",".join(str(s) for s in sorted(self.elements))

    def __repr__(self) -> str:
        return f"ConnectionSet({self.modulus}, {sorted(self.elements)})"


def build_circulant(c: ConnectionSet) -> Graph:
    if 0 in c.elements:
        raise ValueError("connection set of a Cayley graph must not contain 0")
    n = c.modulus
    return Graph(n, frozenset((x, (x + s) % n) for x in range(n) for s in c.elements))


def paley_connection_set(q: int) -> ConnectionSet:
    if not is_prime(q) or q % 4 != 1:
        raise ValueError(f"Paley graphs need a prime q = 1 (mod 4), got {q}")
    return ConnectionSet(q, frozenset((x * x) % q for x in range(1, q)))


def build_paley(q: int) -> Graph:
    return build_circulant(paley_connection_set(q))


def _check_permutation(f: Sequence[int], n: int) -> tuple[int, ...]:
    f = tuple(int(x) for x in f)
    if len(f) != n or sorted(f) != list(range(n)):
        raise ValueError(f"not a permutation of [0, {n}): {f}")
    return f


def apply_permutation(g: Graph, f: Sequence[int]) -> Graph:
    """Image of ``g`` under the vertex bijection ``u -> f[u]``."""
    f = _check_permutation(f, g.n)
    return Graph(g.n, frozenset((f[u], f[v]) for u, v in g.arcs))


def inverse_permutation(f: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(f)
    for i, x in enumerate(f):
        inv[x] = i
    return tuple(inv)


def disjoint_union(*graphs: Graph) -> Graph:
    arcs = set()
    offset = 0
    for g in graphs:
        arcs.update((u + offset, v + offset) for u, v in g.arcs)
        offset += g.n
    return Graph(offset, frozenset(arcs))


def cycle(n: int) -> Graph:
    """Undirected cycle ``C_n`` as a circulant graph."""
    return build_circulant(ConnectionSet(n, frozenset({1, n - 1})))


def complete(n: int) -> Graph:
    return Graph(n, frozenset((u, v) for u in range(n) for v in range(n) if u != v))


def is_isomorphism(g: Graph, h: Graph, f: Sequence[int]) -> bool:
    """True iff ``f`` maps the arcs of ``g`` exactly onto the arcs of ``h``."""
    if g.n != h.n or len(g.arcs) != len(h.arcs):
        return False
    return all((f[u], f[v]) in h.arcs for u, v in g.arcs)
