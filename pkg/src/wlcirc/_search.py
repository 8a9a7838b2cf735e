"""Individualization-refinement search over colored complete digraphs.

A structure is an ``n x n`` integer matrix; an isomorphism from ``L`` to
``R`` is a bijection ``f`` with ``L[a, b] == R[f(a), f(b)]`` for all pairs.
Graphs, configurations and configurations paired by an algebraic
isomorphism all reduce to this form.

Vertex colorings of the two sides are refined jointly, with shared color
names, so that a color histogram mismatch prunes a branch.  Branching always
happens on the right-hand side: the left side follows a fixed path, chosen
from the left coloring alone, which makes the output order deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

DEFAULT_NODE_CAP = 10**7


class SearchLimitExceeded(RuntimeError):
    def __init__(self, nodes: int):
        self.nodes = nodes
        super().__init__(f"search exceeded the node budget ({nodes} nodes)")


@dataclass
class SearchStats:
    nodes: int = 0
    cap: int = DEFAULT_NODE_CAP

    def tick(self) -> None:
        self.nodes += 1
        if self.nodes > self.cap:
            raise SearchLimitExceeded(self.nodes)


def _signature_rows(mat: np.ndarray, mat_t: np.ndarray, c: np.ndarray, k: int) -> np.ndarray:
    out = np.sort(mat * k + c[None, :], axis=1)
    inn = np.sort(mat_t * k + c[None, :], axis=1)
    return np.concatenate([c[:, None], out, inn], axis=1)


def refine_pair(
    mats: tuple[np.ndarray, np.ndarray],
    colors: tuple[np.ndarray, np.ndarray],
) -> tuple[np.ndarray, np.ndarray] | None:
    """Joint equitable refinement; ``None`` when the two sides diverge."""
    (ml, mr), (cl, cr) = mats, colors
    n = cl.size
    mlt, mrt = ml.T, mr.T
    count = -1
    while True:
        joint = np.concatenate([cl, cr])
        _, joint = np.unique(joint, return_inverse=True)
        joint = joint.ravel()
        cl, cr = joint[:n], joint[n:]
        if not np.array_equal(np.bincount(cl, minlength=joint.max() + 1), np.bincount(cr, minlength=joint.max() + 1)):
            return None
        k = int(joint.max()) + 1
        if k == count or k == n:
            return cl, cr
        count = k
        rows = np.concatenate([_signature_rows(ml, mlt, cl, k), _signature_rows(mr, mrt, cr, k)])
        _, inv = np.unique(rows, axis=0, return_inverse=True)
        inv = inv.ravel()
        cl, cr = inv[:n], inv[n:]


def _target_cell(c: np.ndarray) -> tuple[int, np.ndarray] | None:
    """Smallest non-singleton cell of the left coloring; ties go to the least vertex."""
    sizes = np.bincount(c)
    best = None
    for v in range(c.size):
        s = sizes[c[v]]
        if s > 1 and (best is None or s < best[0]):
            best = (s, v)
    if best is None:
        return None
    v = best[1]
    return v, c[v]


def _individualize(c: np.ndarray, v: int) -> np.ndarray:
    out = c * 2
    out[v] += 1
    return out


@dataclass
class Structure:
    """The pair of matrices searched and the initial vertex colors."""

    left: np.ndarray
    right: np.ndarray
    left_colors: np.ndarray | None = None
    right_colors: np.ndarray | None = None
    stats: SearchStats = field(default_factory=SearchStats)

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        n = self.left.shape[0]
        if self.left.shape != self.right.shape:
            raise ValueError("structures have different sizes")
        # the diagonal entry is a vertex invariant
        if self.left_colors is None:
            self.left_colors = np.zeros(n, dtype=np.int64)
        if self.right_colors is None:
            self.right_colors = np.zeros(n, dtype=np.int64)
        self.left_colors = np.asarray(self.left_colors, dtype=np.int64) * (self.left.max(initial=0) + 1) + np.diag(self.left)
        self.right_colors = np.asarray(self.right_colors, dtype=np.int64) * (self.right.max(initial=0) + 1) + np.diag(self.right)

    @property
    def n(self) -> int:
        return self.left.shape[0]


def _leaf_map(cl: np.ndarray, cr: np.ndarray) -> tuple[int, ...]:
    where = np.empty(cr.size, dtype=np.int64)
    where[cr] = np.arange(cr.size)
    return tuple(where[cl].tolist())


def _is_iso(st: Structure, f: tuple[int, ...]) -> bool:
    idx = np.asarray(f)
    return bool(np.array_equal(st.left, st.right[np.ix_(idx, idx)]))


def isomorphisms(st: Structure, first_only: bool = False) -> Iterator[tuple[int, ...]]:
    """All isomorphisms ``left -> right`` in deterministic order."""
    start = refine_pair((st.left, st.right), (st.left_colors, st.right_colors))
    if start is None:
        return
    yield from _descend(st, start[0], start[1], first_only)


def _descend(st: Structure, cl: np.ndarray, cr: np.ndarray, first_only: bool) -> Iterator[tuple[int, ...]]:
    st.stats.tick()
    tgt = _target_cell(cl)
    if tgt is None:
        f = _leaf_map(cl, cr)
        if _is_iso(st, f):
            yield f
        return
    v, col = tgt
    lv = _individualize(cl, v)
    for w in np.nonzero(cr == col)[0].tolist():
        nxt = refine_pair((st.left, st.right), (lv, _individualize(cr, w)))
        if nxt is None:
            continue
        found = False
        for f in _descend(st, nxt[0], nxt[1], first_only):
            found = True
            yield f
        if found and first_only:
            return


def first_isomorphism(st: Structure) -> tuple[int, ...] | None:
    return next(isomorphisms(st, first_only=True), None)


# ---------------------------------------------------------------- automorphism groups


@dataclass
class GroupData:
    generators: list[tuple[int, ...]]
    order: int
    base: list[int]
    orbit_sizes: list[int]
    nodes: int


class _Orbits:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def add(self, perm: tuple[int, ...]) -> None:
        for a, b in enumerate(perm):
            ra, rb = self.find(a), self.find(b)
            if ra != rb:
                self.parent[max(ra, rb)] = min(ra, rb)


def automorphism_group(mat: np.ndarray, colors: np.ndarray | None = None, cap: int = DEFAULT_NODE_CAP) -> GroupData:
    """Generators and order of the color-preserving automorphism group.

    The base is the left-most individualization path.  Levels are handled
    from the deepest up; at each level the orbit of the base point under the
    pointwise stabilizer of the earlier base points is completed by looking
    for one automorphism per unseen orbit.  The order is the product of the
    orbit lengths.
    """
    st = Structure(mat, mat, colors, colors, SearchStats(cap=cap))
    start = refine_pair((st.left, st.right), (st.left_colors, st.right_colors))
    n = st.n
    # left-most path
    path = [start[0]]
    base = []
    while True:
        tgt = _target_cell(path[-1])
        if tgt is None:
            break
        v, _ = tgt
        base.append(v)
        nxt = refine_pair((st.left, st.left), (_individualize(path[-1], v), _individualize(path[-1], v)))
        path.append(nxt[0])
    gens: list[tuple[int, ...]] = []
    sizes = [0] * len(base)
    for level in range(len(base) - 1, -1, -1):
        c = path[level]
        v = base[level]
        orbits = _Orbits(n)
        for g in gens:
            orbits.add(g)
        lv = _individualize(c, v)
        for w in np.nonzero(c == c[v])[0].tolist():
            if orbits.find(w) == orbits.find(v):
                continue
            nxt = refine_pair((st.left, st.left), (lv, _individualize(c, w)))
            if nxt is None:
                continue
            f = next(_descend(st, nxt[0], nxt[1], True), None)
            if f is not None:
                gens.append(f)
                orbits.add(f)
        root = orbits.find(v)
        sizes[level] = sum(1 for w in np.nonzero(c == c[v])[0].tolist() if orbits.find(w) == root)
    order = 1
    for s in sizes:
        order *= s
    return GroupData(gens, order, base, sizes, st.stats.nodes)
