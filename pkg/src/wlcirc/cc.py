"""Coherent configurations given by a color table on ``Omega x Omega``.

A configuration is stored as an ``n x n`` table whose entry at ``(a, b)`` is
the index of the basis relation containing the pair.  Indices are numbered
by first appearance in row-major order, so two configurations with the same
partition have identical tables.  Relations of the configuration (elements
of ``S^cup``) are passed around as frozensets of basis indices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .graphs import Graph
from .wl import _tuple_step, canonical_labels, refine_lockstep, stable_coloring

Relation = frozenset


class AxiomViolation(ValueError):
    """The partition fails C1, C2 or C3; ``witness`` names the offending data."""

    def __init__(self, axiom: str, message: str, witness: tuple):
        self.axiom = axiom
        self.witness = witness
        super().__init__(f"{axiom}: {message}")


class NotAParabolic(ValueError):
    pass


def _check_table(table) -> np.ndarray:
    t = np.asarray(table)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 1:
        raise ValueError("a partition of Omega^2 is given by a nonempty square table")
    return canonical_labels(t.astype(np.int64))


def find_violation(table) -> AxiomViolation | None:
    """Return the first violated axiom with a witness, or ``None``."""
    t = _check_table(table)
    n = t.shape[0]
    rank = int(t.max()) + 1
    diag = np.zeros(rank, dtype=np.int64)
    np.add.at(diag, np.diag(t), 1)
    sizes = np.bincount(t.ravel(), minlength=rank)
    for r in range(rank):
        if 0 < diag[r] < sizes[r]:
            a = int(np.nonzero(np.diag(t) == r)[0][0])
            off = np.argwhere((t == r) & ~np.eye(n, dtype=bool))[0]
            return AxiomViolation(
                "C1",
                f"class {r} mixes diagonal and off-diagonal pairs",
                (r, (a, a), tuple(int(v) for v in off)),
            )
    pairs = np.unique(t.ravel() * rank + t.T.ravel())
    if pairs.size != rank:
        src = pairs // rank
        r = int(src[np.nonzero(np.diff(src) == 0)[0][0]])
        tr = t.T[t == r]
        ab = [tuple(int(v) for v in x) for x in np.argwhere(t == r)]
        first = next(p for p in ab if t[p[1], p[0]] == tr[0])
        other = next(p for p in ab if t[p[1], p[0]] != tr[0])
        return AxiomViolation("C2", f"transposes of class {r} fall into several classes", (r, first, other))
    (new,) = _tuple_step([t])
    if np.unique(new).size != rank:
        for r in range(rank):
            members = np.argwhere(t == r)
            profile = new[t == r]
            if np.unique(profile).size > 1:
                a, b = (int(v) for v in members[0])
                c, d = (int(v) for v in members[np.nonzero(profile != profile[0])[0][0]])
                h1 = np.bincount(t[a, :] * rank + t[:, b], minlength=rank * rank)
                h2 = np.bincount(t[c, :] * rank + t[:, d], minlength=rank * rank)
                k = int(np.nonzero(h1 != h2)[0][0])
                rr, ss = divmod(k, rank)
                # c_{rs}^t counts gamma with (a,gamma) in r and (gamma,b) in s
                return AxiomViolation(
                    "C3",
                    f"|alpha r cap beta s*| for (r,s,t)=({rr},{ss},{r}) is {h1[k]} at {(a, b)} "
                    f"but {h2[k]} at {(c, d)}",
                    (rr, ss, r, (a, b), (c, d)),
                )
    return None


class CoherentConfiguration:
    """A validated coherent configuration on ``{0..n-1}``."""

    def __init__(self, table, _trusted: bool = False):
        t = _check_table(table)
        if not _trusted:
            v = find_violation(t)
            if v is not None:
                raise v
        t.flags.writeable = False
        self.table = t
        self.n = t.shape[0]
        self.rank = int(t.max()) + 1

    # -- basic data

    @cached_property
    def transpose_of(self) -> tuple[int, ...]:
        out = [0] * self.rank
        for r, rt in zip(self.table.ravel().tolist(), self.table.T.ravel().tolist()):
            out[r] = rt
        return tuple(out)

    @cached_property
    def diagonal_classes(self) -> frozenset:
        return frozenset(np.diag(self.table).tolist())

    @cached_property
    def fibers(self) -> tuple[tuple[int, ...], ...]:
        d = np.diag(self.table)
        out = {}
        for a, r in enumerate(d.tolist()):
            out.setdefault(r, []).append(a)
        return tuple(tuple(v) for v in out.values())

    @cached_property
    def fiber_index(self) -> np.ndarray:
        idx = np.empty(self.n, dtype=np.int64)
        for i, f in enumerate(self.fibers):
            idx[list(f)] = i
        return idx

    @cached_property
    def class_fibers(self) -> tuple[tuple[int, int], ...]:
        """Fibers ``(Delta, Gamma)`` with basis relation ``r`` inside ``Delta x Gamma``."""
        out = [None] * self.rank
        fi = self.fiber_index
        for a in range(self.n):
            for r, b in zip(self.table[a].tolist(), range(self.n)):
                if out[r] is None:
                    out[r] = (int(fi[a]), int(fi[b]))
        return tuple(out)

    @cached_property
    def sizes(self) -> tuple[int, ...]:
        return tuple(np.bincount(self.table.ravel(), minlength=self.rank).tolist())

    def valency(self, r: int) -> int:
        """``|alpha r|`` for any ``alpha`` in the left fiber of ``r``."""
        left = self.fibers[self.class_fibers[r][0]]
        return self.sizes[r] // len(left)

    @cached_property
    def constants(self) -> dict[tuple[int, int, int], int]:
        """Nonzero intersection numbers ``c_{rs}^t``."""
        rank = self.rank
        reps = {}
        for i, r in enumerate(self.table.ravel().tolist()):
            if r not in reps:
                reps[r] = divmod(i, self.n)
        out = {}
        for t in range(rank):
            a, b = reps[t]
            keys, counts = np.unique(self.table[a, :] * rank + self.table[:, b], return_counts=True)
            for k, v in zip(keys.tolist(), counts.tolist()):
                r, s = divmod(k, rank)
                out[(r, s, t)] = v
        return out

    def constant(self, r: int, s: int, t: int) -> int:
        return self.constants.get((r, s, t), 0)

    @property
    def is_scheme(self) -> bool:
        """Homogeneous: the diagonal is a single basis relation."""
        return len(self.fibers) == 1

    @cached_property
    def is_commutative(self) -> bool:
        c = self.constants
        return all(c.get((s, r, t), 0) == v for (r, s, t), v in c.items())

    @property
    def is_trivial(self) -> bool:
        return self.is_scheme and self.rank <= 2

    def relation(self, s: Iterable[int]) -> np.ndarray:
        """Boolean matrix of the union of the given basis relations."""
        mask = np.zeros(self.rank, dtype=bool)
        mask[list(s)] = True
        return mask[self.table]

    def classes_meeting(self, pairs: np.ndarray) -> Relation:
        return frozenset(np.unique(self.table[pairs]).tolist())

    def in_closure(self, rel: np.ndarray) -> bool:
        """Is the pair set ``rel`` a union of basis relations?"""
        inside = np.unique(self.table[rel])
        return bool(self.relation(inside.tolist()).sum() == rel.sum())

    def neighbourhood(self, a: int, r: int) -> tuple[int, ...]:
        return tuple(np.nonzero(self.table[a] == r)[0].tolist())

    # -- comparison and output

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoherentConfiguration):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.n, self.table.tobytes()))

    def __repr__(self) -> str:
        return f"CoherentConfiguration(n={self.n}, rank={self.rank}, fibers={len(self.fibers)})"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rank": self.rank,
            "fibers": [list(f) for f in self.fibers],
            "table": self.table.ravel().tolist(),
            "constants": [[r, s, t, v] for (r, s, t), v in sorted(self.constants.items())],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def relabeled(self, f: Sequence[int]) -> CoherentConfiguration:
        """Image under the point bijection ``a -> f[a]``."""
        f = np.asarray(f, dtype=np.int64)
        if sorted(f.tolist()) != list(range(self.n)):
            raise ValueError("not a permutation of the domain")
        out = np.empty_like(self.table)
        out[np.ix_(f, f)] = self.table
        return CoherentConfiguration(out, _trusted=True)


def validate(table) -> CoherentConfiguration:
    """Check C1-C3 and return the configuration; raises :class:`AxiomViolation`."""
    return CoherentConfiguration(table)


def from_classes(n: int, classes: Iterable[Iterable[tuple[int, int]]]) -> CoherentConfiguration:
    """Build from an explicit list of pair classes covering ``Omega^2``."""
    t = np.full((n, n), -1, dtype=np.int64)
    for i, cls in enumerate(classes):
        for a, b in cls:
            if t[a, b] != -1:
                raise ValueError(f"pair {(a, b)} appears in two classes")
            t[a, b] = i
    if (t < 0).any():
        raise ValueError("classes do not cover Omega^2")
    return validate(t)


def cc_of_graph(g: Graph) -> CoherentConfiguration:
    return CoherentConfiguration(stable_coloring(g, 2).grid(), _trusted=True)


def trivial(n: int) -> CoherentConfiguration:
    return CoherentConfiguration(1 - np.eye(n, dtype=np.int64), _trusted=True)


def discrete(n: int) -> CoherentConfiguration:
    return CoherentConfiguration(np.arange(n * n).reshape(n, n), _trusted=True)


def thin_cyclic(n: int) -> CoherentConfiguration:
    """The regular scheme of ``Z_n``: classes ``{(x, x+g)}``."""
    idx = np.arange(n)
    return CoherentConfiguration((idx[None, :] - idx[:, None]) % n, _trusted=True)


def stabilize(table) -> CoherentConfiguration:
    """Smallest coherent configuration whose relations include the classes of ``table``."""
    t = np.asarray(table, dtype=np.int64)
    n = t.shape[0]
    key = t * 2 + np.eye(n, dtype=np.int64)
    key = key * (int(key.max()) + 1) + key.T
    res = refine_lockstep([canonical_labels(key)], compare=False)
    return CoherentConfiguration(res.grids[0], _trusted=True)


def refines(x: CoherentConfiguration, y: CoherentConfiguration) -> bool:
    """``x <= y``: every basis relation of ``x`` is a union of basis relations of ``y``."""
    if x.n != y.n:
        raise ValueError(f"domain sizes differ ({x.n} vs {y.n})")
    pairs = np.unique(y.table.ravel() * x.rank + x.table.ravel())
    return pairs.size == y.rank


# ---------------------------------------------------------------- parabolics


@dataclass(frozen=True, eq=False)
class Parabolic:
    owner: CoherentConfiguration = field(repr=False)
    blocks: tuple[tuple[int, ...], ...]
    relation_colors: Relation

    @cached_property
    def block_of(self) -> np.ndarray:
        out = np.empty(self.owner.n, dtype=np.int64)
        for i, b in enumerate(self.blocks):
            out[list(b)] = i
        return out

    def matrix(self) -> np.ndarray:
        b = self.block_of
        return b[:, None] == b[None, :]

    def contains(self, other: Parabolic) -> bool:
        return other.relation_colors <= self.relation_colors

    def key(self) -> tuple:
        return self.blocks

    def __eq__(self, other) -> bool:
        if not isinstance(other, Parabolic):
            return NotImplemented
        return self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self) -> str:
        return f"Parabolic(blocks={[list(b) for b in self.blocks]})"


def _blocks_from_labels(labels: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    out: dict[int, list[int]] = {}
    for a, lab in enumerate(labels):
        out.setdefault(int(lab), []).append(a)
    return tuple(sorted(tuple(v) for v in out.values()))


def parabolic_from_blocks(x: CoherentConfiguration, labels: Sequence[int]) -> Parabolic:
    """Wrap an equivalence relation given by block labels; it must lie in ``S^cup``."""
    labels = np.asarray(labels)
    eq = labels[:, None] == labels[None, :]
    if not x.in_closure(eq):
        raise NotAParabolic("equivalence relation is not a union of basis relations")
    return Parabolic(x, _blocks_from_labels(labels.tolist()), x.classes_meeting(eq))


def _components(n: int, rel: np.ndarray) -> list[int]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in np.argwhere(rel).tolist():
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return [find(a) for a in range(n)]


def parabolic_closure(x: CoherentConfiguration, s: Iterable[int]) -> Parabolic:
    """The smallest parabolic containing the relation ``s``."""
    s = frozenset(s)
    if not s <= set(range(x.rank)):
        raise ValueError(f"basis indices outside [0, {x.rank})")
    return parabolic_from_blocks(x, _components(x.n, x.relation(s)))


def radical(x: CoherentConfiguration, s: Iterable[int]) -> Parabolic:
    """The largest parabolic ``e`` with ``s`` a union of products of ``e``-blocks."""
    rel = x.relation(frozenset(s))
    sig = np.concatenate([rel, rel.T], axis=1)
    _, labels = np.unique(sig, axis=0, return_inverse=True)
    labels = labels.ravel()
    try:
        e = parabolic_from_blocks(x, labels)
    except NotAParabolic as exc:
        raise AssertionError("radical is not a relation of the configuration") from exc
    # s must be a union of blocks Delta x Delta'; any coarser e would break this
    nb = len(e.blocks)
    bl = e.block_of
    hits = np.zeros((nb, nb), dtype=np.int64)
    np.add.at(hits, (bl[:, None].repeat(x.n, 1), bl[None, :].repeat(x.n, 0)), rel.astype(np.int64))
    sizes = np.array([len(b) for b in e.blocks])
    full = sizes[:, None] * sizes[None, :]
    if not np.all((hits == 0) | (hits == full)):
        raise AssertionError("relation is not a union of radical blocks")
    return e


def join(x: CoherentConfiguration, e: Parabolic, f: Parabolic) -> Parabolic:
    return parabolic_closure(x, e.relation_colors | f.relation_colors)


def meet(x: CoherentConfiguration, e: Parabolic, f: Parabolic) -> Parabolic:
    labels = e.block_of * len(f.blocks) + f.block_of
    return parabolic_from_blocks(x, labels)


def all_parabolics(x: CoherentConfiguration, exhaustive: bool = False) -> list[Parabolic]:
    """All parabolics, ordered by (number of blocks descending, blocks).

    The default builds the lattice from single-relation closures under join
    and meet.  ``exhaustive`` scans all unions of basis relations instead
    (rank at most 20) and serves as a cross-check.
    """
    if exhaustive:
        if x.rank > 20:
            raise ValueError("exhaustive parabolic scan is limited to rank 20")
        found = set()
        diag = x.diagonal_classes
        others = [r for r in range(x.rank) if r not in diag]
        for k in range(len(others) + 1):
            for extra in combinations(others, k):
                rel = x.relation(diag | frozenset(extra))
                if (rel == rel.T).all() and ((rel.astype(np.int64) @ rel.astype(np.int64) > 0) <= rel).all():
                    found.add(parabolic_from_blocks(x, _components(x.n, rel)))
    else:
        found = {parabolic_closure(x, x.diagonal_classes)}
        found |= {parabolic_closure(x, {r}) for r in range(x.rank)}
        frontier = list(found)
        while frontier:
            new = set()
            for e in frontier:
                for f in list(found):
                    for g in (join(x, e, f), meet(x, e, f)):
                        if g not in found and g not in new:
                            new.add(g)
            found |= new
            frontier = list(new)
    return sorted(found, key=lambda e: (-len(e.blocks), e.blocks))


# ---------------------------------------------------------------- derived configurations


def _require_parabolic(x: CoherentConfiguration, e: Parabolic) -> None:
    if e.owner is not x and e.owner != x:
        parabolic_from_blocks(x, e.block_of)


def quotient(x: CoherentConfiguration, e: Parabolic) -> CoherentConfiguration:
    """Configuration on the blocks of ``e`` with classes ``s_{Omega/e}``."""
    _require_parabolic(x, e)
    nb = len(e.blocks)
    meets: list[list[frozenset]] = [[frozenset()] * nb for _ in range(nb)]
    owner: dict[int, frozenset] = {}
    for i, bi in enumerate(e.blocks):
        for j, bj in enumerate(e.blocks):
            m = frozenset(np.unique(x.table[np.ix_(bi, bj)]).tolist())
            meets[i][j] = m
            for s in m:
                if owner.setdefault(s, m) != m:
                    raise AxiomViolation(
                        "C3", "quotient classes overlap; e is not a parabolic", (s, i, j)
                    )
    ids: dict[frozenset, int] = {}
    t = np.array([[ids.setdefault(meets[i][j], len(ids)) for j in range(nb)] for i in range(nb)])
    return validate(t)


def _union_of_fibers(x: CoherentConfiguration, delta: frozenset) -> bool:
    return all(set(f) <= delta or not (set(f) & delta) for f in x.fibers)


def is_parabolic_class(x: CoherentConfiguration, delta: Iterable[int]) -> bool:
    delta = sorted(set(delta))
    sq = np.zeros((x.n, x.n), dtype=bool)
    sq[np.ix_(delta, delta)] = True
    closure = parabolic_closure(x, x.classes_meeting(sq))
    return tuple(delta) in closure.blocks


def restriction(x: CoherentConfiguration, delta: Iterable[int]) -> CoherentConfiguration:
    """Restriction to ``delta``, a parabolic class or a union of fibers.

    Points of ``delta`` are renumbered ``0..|delta|-1`` in increasing order.
    """
    d = sorted(set(int(a) for a in delta))
    if not d or d[0] < 0 or d[-1] >= x.n:
        raise ValueError("restriction needs a nonempty subset of the domain")
    if not (is_parabolic_class(x, d) or _union_of_fibers(x, frozenset(d))):
        raise NotAParabolic(f"{d} is neither a parabolic class nor a union of fibers")
    return validate(x.table[np.ix_(d, d)])


def section(x: CoherentConfiguration, delta: Iterable[int], e: Parabolic) -> CoherentConfiguration:
    """``delta/e``: restrict to ``delta`` and take the quotient by ``e`` there."""
    d = sorted(set(int(a) for a in delta))
    blocks_in = [b for b in e.blocks if set(b) & set(d)]
    if any(not set(b) <= set(d) for b in blocks_in):
        raise ValueError("section class is not a union of blocks of e")
    sub = restriction(x, d)
    pos = {a: i for i, a in enumerate(d)}
    labels = [0] * len(d)
    for k, b in enumerate(blocks_in):
        for a in b:
            labels[pos[a]] = k
    return quotient(sub, parabolic_from_blocks(sub, labels))


def point_extension(x: CoherentConfiguration, points: Sequence[int]) -> CoherentConfiguration:
    """Smallest configuration refining ``x`` in which every ``1_alpha`` is a class."""
    pts = list(dict.fromkeys(int(p) for p in points))
    for p in pts:
        if not 0 <= p < x.n:
            raise ValueError(f"point {p} outside [0, {x.n})")
    if not pts:
        return x
    mark = np.zeros(x.n, dtype=np.int64)
    for i, p in enumerate(pts, start=1):
        mark[p] = i
    k = len(pts) + 1
    key = (x.table * k + mark[:, None]) * k + mark[None, :]
    res = refine_lockstep([canonical_labels(key)], compare=False)
    return CoherentConfiguration(res.grids[0], _trusted=True)


def is_partly_regular(x: CoherentConfiguration) -> int | None:
    """Least point ``alpha`` with ``|alpha s| <= 1`` for every basis relation ``s``."""
    for a in range(x.n):
        if np.unique(x.table[a]).size == x.n:
            return a
    return None
