"""Seeded families of test objects: connection sets, circulant schemes,
random graphs and doubly regular tournaments."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .cc import CoherentConfiguration, stabilize
from .circulant import CirculantScheme, scheme_from_cayley, scheme_from_partition, units
from .graphs import ConnectionSet, Graph

EXHAUSTIVE_LIMIT = 16


def multiplier_rep(n: int, elements) -> tuple[int, ...]:
    """Least sorted image of a connection set under ``S -> mS``."""
    return min(tuple(sorted((m * g) % n for g in elements)) for m in units(n))


def all_connection_sets(n: int) -> list[ConnectionSet]:
    """Every subset of ``Z_n \\ {0}``, ordered by bitmask."""
    out = []
    for mask in range(1 << (n - 1)):
        out.append(ConnectionSet(n, frozenset(g for g in range(1, n) if mask >> (g - 1) & 1)))
    return out


def connection_set_reps(n: int) -> list[ConnectionSet]:
    """One connection set per orbit of the multiplier action."""
    seen: set[tuple[int, ...]] = set()
    out = []
    for c in all_connection_sets(n):
        rep = multiplier_rep(n, c.elements)
        if rep not in seen:
            seen.add(rep)
            out.append(ConnectionSet(n, frozenset(rep)))
    return out


def random_connection_sets(n: int, count: int, seed: int = 0) -> list[ConnectionSet]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        mask = rng.random(n - 1) < rng.uniform(0.15, 0.85)
        out.append(ConnectionSet(n, frozenset(int(g) for g in np.nonzero(mask)[0] + 1)))
    return out


def multiplier_images(c: ConnectionSet, count: int, rng: np.random.Generator) -> list[ConnectionSet]:
    us = units(c.modulus)
    return [c.scaled(int(m)) for m in rng.choice(us, size=min(count, len(us)), replace=False)]


def structured_connection_sets(n: int, count: int, seed: int = 0) -> list[ConnectionSet]:
    """Random sets made of whole cosets of a subgroup outside it, plus a part inside."""
    rng = np.random.default_rng(seed)
    divs = [d for d in range(2, n) if n % d == 0]
    out = []
    if not divs:
        return out
    for _ in range(count):
        h = int(rng.choice(divs))
        q = n // h
        inner = {g for g in range(q, n, q) if rng.random() < 0.5}
        outer = {g for k in range(1, q) if rng.random() < 0.5 for g in range(k, n, q)}
        out.append(ConnectionSet(n, frozenset(inner | outer)))
    return out


def orbit_schemes(n: int) -> list[CirculantScheme]:
    """Orbit schemes of the subgroups of ``Aut(Z_n)`` generated by one multiplier."""
    out = []
    seen = set()
    for m in units(n):
        gen = frozenset(pow(m, k, n) for k in range(n))
        if gen in seen:
            continue
        seen.add(gen)
        orbits: dict[frozenset, None] = {}
        for g in range(n):
            orbits.setdefault(frozenset((u * g) % n for u in gen), None)
        out.append(scheme_from_partition(n, [sorted(o) for o in orbits]))
    return out


def join_schemes(x: CirculantScheme, y: CirculantScheme) -> CirculantScheme:
    """Least scheme refining both (the WL closure of the common refinement)."""
    return CirculantScheme(stabilize(x.cc.table * y.rank + y.cc.table))


def meet_schemes(x: CirculantScheme, y: CirculantScheme) -> CirculantScheme:
    """Greatest scheme coarser than both: basic sets are the finest common coarsening."""
    n = x.n
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for s in (x, y):
        for t in s.basic_sets:
            items = sorted(t)
            for g in items[1:]:
                ra, rb = find(items[0]), find(g)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for g in range(n):
        groups.setdefault(find(g), []).append(g)
    return scheme_from_partition(n, list(groups.values()))


def _dedupe_sorted(schemes) -> list[CirculantScheme]:
    seen: dict[CoherentConfiguration, CirculantScheme] = {}
    for s in schemes:
        seen.setdefault(s.cc, s)
    return sorted(seen.values(), key=lambda s: (s.rank, s.cc.table.tobytes()))


def wreath_scheme(inner: CirculantScheme, outer: CirculantScheme) -> CirculantScheme:
    """Wreath product on ``Z_n``, ``n = inner.n * outer.n``, with ``inner`` on the subgroup of order ``inner.n``."""
    h, q = inner.n, outer.n
    n = h * q
    sets = [[k * q for k in t] for t in inner.basic_sets]
    sets += [[x for x in range(n) if x % q in t] for t in outer.basic_sets if 0 not in t]
    return scheme_from_partition(n, sets)


def lattice_closure(schemes, limit: int = 400) -> list[CirculantScheme]:
    """Close under pairwise meets and joins, stopping once ``limit`` schemes are reached."""
    out = _dedupe_sorted(schemes)
    done: set[tuple[CoherentConfiguration, CoherentConfiguration]] = set()
    while len(out) < limit:
        new = []
        for x, y in combinations(out, 2):
            if (x.cc, y.cc) in done:
                continue
            done.add((x.cc, y.cc))
            new += [meet_schemes(x, y), join_schemes(x, y)]
        grown = _dedupe_sorted(out + new)
        if len(grown) == len(out):
            break
        out = grown
    return out


@lru_cache(maxsize=None)
def scheme_corpus(n: int, seed: int = 0, samples: int = 200) -> tuple[CirculantScheme, ...]:
    """Circulant schemes on ``Z_n`` closed under meets and joins.

    For ``n <= 16`` the generators are the closures of all Cayley graphs up to
    multipliers.  Beyond that they are closures of seeded random and
    coset-structured connection sets, orbit schemes of cyclic multiplier
    groups and wreath products of smaller corpus schemes.
    """
    if n <= EXHAUSTIVE_LIMIT:
        base = [scheme_from_cayley(c) for c in connection_set_reps(n)]
    else:
        sets = random_connection_sets(n, samples, seed) + structured_connection_sets(n, samples, seed + 1)
        base = [scheme_from_cayley(c) for c in sets] + orbit_schemes(n)
        for h in range(2, n):
            if n % h == 0:
                base += [wreath_scheme(a, b) for a in scheme_corpus(h, seed, samples) for b in scheme_corpus(n // h, seed, samples)]
    return tuple(lattice_closure(base))


# ---------------------------------------------------------------- graphs


def random_graph(n: int, rng: np.random.Generator, directed: bool | None = None, loops: bool = False) -> Graph:
    """Random graph with a random density; undirected or directed at random unless fixed."""
    if directed is None:
        directed = bool(rng.random() < 0.5)
    p = rng.uniform(0.1, 0.9)
    adj = rng.random((n, n)) < p
    if not loops:
        np.fill_diagonal(adj, False)
    if not directed:
        adj = np.triu(adj, 1)
        adj = adj | adj.T
    return Graph.from_adjacency(adj)


@dataclass(frozen=True)
class TournamentSearch:
    graph: Graph | None
    seed: int
    restarts: int
    steps: int

    @property
    def found(self) -> bool:
        return self.graph is not None

    def status(self) -> str:
        return "found" if self.found else "search exhausted"


def is_doubly_regular_tournament(adj: np.ndarray) -> bool:
    a = np.asarray(adj, dtype=np.int64)
    n = a.shape[0]
    if n % 4 != 3 or np.any(np.diag(a)) or not np.array_equal(a + a.T, 1 - np.eye(n, dtype=np.int64)):
        return False
    k = (n + 1) // 4
    return bool(np.array_equal(a @ a.T, k * np.eye(n, dtype=np.int64) + (k - 1) * np.ones((n, n), dtype=np.int64)))


def doubly_regular_tournament(
    n: int = 15, seed: int = 0, restarts: int = 200, steps: int = 20000, temperature: float = 2.0
) -> TournamentSearch:
    """Seeded local search for a doubly regular tournament of order ``n``.

    Arcs are reversed one at a time under a Metropolis rule on the squared
    distance of ``A A^T`` from ``k I + (k - 1) J``, ``k = (n + 1) / 4``.
    """
    if n % 4 != 3:
        raise ValueError("doubly regular tournaments need n = 3 mod 4")
    rng = np.random.default_rng(seed)
    k = (n + 1) // 4
    target = k * np.eye(n, dtype=np.int64) + (k - 1) * np.ones((n, n), dtype=np.int64)
    iu, ju = np.triu_indices(n, 1)

    def score(a: np.ndarray) -> int:
        d = a @ a.T - target
        return int((d * d).sum())

    for _ in range(restarts):
        a = np.zeros((n, n), dtype=np.int64)
        up = rng.random(iu.size) < 0.5
        a[iu[up], ju[up]] = 1
        a[ju[~up], iu[~up]] = 1
        cur = score(a)
        for _ in range(steps):
            if cur == 0:
                break
            e = int(rng.integers(iu.size))
            i, j = int(iu[e]), int(ju[e])
            a[i, j], a[j, i] = a[j, i], a[i, j]
            new = score(a)
            if new <= cur or rng.random() < np.exp((cur - new) / temperature):
                cur = new
            else:
                a[i, j], a[j, i] = a[j, i], a[i, j]
        if cur == 0:
            assert is_doubly_regular_tournament(a)
            return TournamentSearch(Graph.from_adjacency(a.astype(bool)), seed, restarts, steps)
    return TournamentSearch(None, seed, restarts, steps)
