"""Isomorphisms of graphs and configurations, algebraic isomorphisms and their
point extensions, sesquiclosedness, separability checks and an independent
brute-force isomorphism oracle.
"""

from __future__ import annotations

import json
from dataclasses import InitVar, dataclass, field
from itertools import permutations
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _search
from ._search import DEFAULT_NODE_CAP, SearchLimitExceeded, SearchStats, Structure
from .cc import CoherentConfiguration, point_extension
from .graphs import Graph, is_isomorphism
from .wl import canonical_labels, refine_lockstep

VERDICTS = ("isomorphic", "non-isomorphic", "undecided")


# ---------------------------------------------------------------- algebraic isomorphisms


class NotAnAlgebraicIsomorphism(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AlgebraicIso:
    """A bijection ``r -> mapping[r]`` between basis relations preserving all constants."""

    source: CoherentConfiguration = field(repr=False)
    target: CoherentConfiguration = field(repr=False)
    mapping: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(v) for v in self.mapping)
        object.__setattr__(self, "mapping", m)
        x, y = self.source, self.target
        if len(m) != x.rank or x.rank != y.rank or sorted(m) != list(range(y.rank)):
            raise NotAnAlgebraicIsomorphism("mapping is not a bijection between basis relations")
        for r in range(x.rank):
            if (r in x.diagonal_classes) != (m[r] in y.diagonal_classes):
                raise NotAnAlgebraicIsomorphism(f"relation {r} and its image differ in being diagonal")
            if m[x.transpose_of[r]] != y.transpose_of[m[r]]:
                raise NotAnAlgebraicIsomorphism(f"mapping does not commute with transposition at {r}")
        yc = y.constants
        if len(x.constants) != len(yc):
            raise NotAnAlgebraicIsomorphism("different numbers of nonzero constants")
        for (r, s, t), v in x.constants.items():
            if yc.get((m[r], m[s], m[t]), 0) != v:
                raise NotAnAlgebraicIsomorphism(f"constant c_{{{r},{s}}}^{t} is not preserved")

    def __call__(self, r: int) -> int:
        return self.mapping[r]

    @property
    def is_identity(self) -> bool:
        return self.source == self.target and self.mapping == tuple(range(len(self.mapping)))

    def inverse(self) -> AlgebraicIso:
        inv = [0] * len(self.mapping)
        for r, s in enumerate(self.mapping):
            inv[s] = r
        return AlgebraicIso(self.target, self.source, tuple(inv))

    def apply_to_table(self) -> np.ndarray:
        """The source table with every class renamed by the mapping."""
        return np.asarray(self.mapping, dtype=np.int64)[self.source.table]

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraicIso):
            return NotImplemented
        return self.source == other.source and self.target == other.target and self.mapping == other.mapping

    def __hash__(self):
        return hash((self.source, self.target, self.mapping))

    def to_dict(self) -> dict:
        return {"rank": len(self.mapping), "mapping": list(self.mapping)}


def identity_iso(x: CoherentConfiguration) -> AlgebraicIso:
    return AlgebraicIso(x, x, tuple(range(x.rank)))


def induced_algebraic_iso(f: Sequence[int], x: CoherentConfiguration, y: CoherentConfiguration) -> AlgebraicIso:
    """The map ``s -> s^f`` for a combinatorial isomorphism ``f: x -> y``."""
    f = np.asarray(f, dtype=np.int64)
    if x.n != y.n or sorted(f.tolist()) != list(range(x.n)):
        raise ValueError("f is not a bijection between the domains")
    img = y.table[np.ix_(f, f)]
    pairs = np.unique(x.table.ravel() * y.rank + img.ravel())
    if pairs.size != x.rank or x.rank != y.rank or np.unique(pairs % y.rank).size != y.rank:
        raise ValueError("f is not an isomorphism of the configurations")
    m = [0] * x.rank
    for p in pairs.tolist():
        m[p // y.rank] = p % y.rank
    return AlgebraicIso(x, y, tuple(m))


def _invariants(x: CoherentConfiguration) -> list[tuple]:
    c = x.constants
    prof_r: list[list[int]] = [[] for _ in range(x.rank)]
    prof_s: list[list[int]] = [[] for _ in range(x.rank)]
    prof_t: list[list[int]] = [[] for _ in range(x.rank)]
    for (r, s, t), v in c.items():
        prof_r[r].append(v)
        prof_s[s].append(v)
        prof_t[t].append(v)
    return [
        (
            r in x.diagonal_classes,
            x.transpose_of[r] == r,
            x.sizes[r],
            x.valency(r),
            tuple(sorted(prof_r[r])),
            tuple(sorted(prof_s[r])),
            tuple(sorted(prof_t[r])),
        )
        for r in range(x.rank)
    ]


def _dense_constants(x: CoherentConfiguration) -> np.ndarray:
    out = np.zeros((x.rank,) * 3, dtype=np.int64)
    for (r, s, t), v in x.constants.items():
        out[r, s, t] = v
    return out


def algebraic_isos(
    x: CoherentConfiguration, y: CoherentConfiguration, cap: int = DEFAULT_NODE_CAP
) -> list[AlgebraicIso]:
    """All algebraic isomorphisms ``x -> y`` by backtracking over basis indices.

    Candidates are restricted by invariants (diagonal or not, symmetric or
    not, size, valency and the sorted constant profiles); each assignment
    also fixes the image of the transpose and is checked against every
    constant among assigned indices.
    """
    if x.rank != y.rank or x.n != y.n:
        return []
    if x.rank > 160:
        raise ValueError("algebraic isomorphism search is limited to rank 160")
    ix, iy = _invariants(x), _invariants(y)
    if sorted(ix) != sorted(iy):
        return []
    cand = [[s for s in range(y.rank) if iy[s] == ix[r]] for r in range(x.rank)]
    cx, cy = _dense_constants(x), _dense_constants(y)
    order = sorted(range(x.rank), key=lambda r: (len(cand[r]), r))
    stats = SearchStats(cap=cap)
    phi = [-1] * x.rank
    used = [False] * y.rank
    out: list[AlgebraicIso] = []

    def consistent(assigned: list[int]) -> bool:
        a = np.asarray(assigned)
        b = np.asarray([phi[r] for r in assigned])
        return bool(np.array_equal(cx[np.ix_(a, a, a)], cy[np.ix_(b, b, b)]))

    def assign(k: int, assigned: list[int]) -> None:
        stats.tick()
        if k == len(order):
            out.append(AlgebraicIso(x, y, tuple(phi)))
            return
        r = order[k]
        if phi[r] >= 0:
            assign(k + 1, assigned)
            return
        rt = x.transpose_of[r]
        for s in cand[r]:
            st = y.transpose_of[s]
            if used[s] or (rt != r and (used[st] or st not in cand[rt])) or ((rt == r) != (st == s)):
                continue
            phi[r], used[s] = s, True
            phi[rt], used[st] = st, True
            new = assigned + ([r] if rt == r else [r, rt])
            if consistent(new):
                assign(k + 1, new)
            phi[r] = phi[rt] = -1
            used[s] = used[st] = False

    assign(0, [])
    out.sort(key=lambda p: p.mapping)
    return out


# ---------------------------------------------------------------- point extensions of algebraic isos


def _extension_key(table: np.ndarray, point: int) -> np.ndarray:
    n = table.shape[0]
    mark = np.zeros(n, dtype=np.int64)
    mark[point] = 1
    return (table * 2 + mark[:, None]) * 2 + mark[None, :]


def extension_of(phi: AlgebraicIso, alpha: int, alpha2: int) -> AlgebraicIso | None:
    """The ``(alpha, alpha2)``-extension of ``phi`` to the one-point extensions, if any."""
    x, y = phi.source, phi.target
    if not (0 <= alpha < x.n and 0 <= alpha2 < y.n):
        raise ValueError("points outside the domains")
    if phi(x.table[alpha, alpha]) != y.table[alpha2, alpha2]:
        raise ValueError("phi does not map the fiber of alpha onto the fiber of alpha2")
    kx = _extension_key(phi.apply_to_table(), alpha)
    ky = _extension_key(y.table, alpha2)
    joint = canonical_labels(np.concatenate([kx.ravel(), ky.ravel()]))
    n = x.n
    gx = joint[: n * n].reshape(n, n)
    gy = joint[n * n :].reshape(n, n)
    res = refine_lockstep([gx, gy])
    if not res.agree:
        return None
    gx, gy = res.grids
    xa = point_extension(x, [alpha])
    ya = point_extension(y, [alpha2])
    if xa.rank != ya.rank:
        return None
    # shared color names pair the classes
    name_x = {}
    for c, r in zip(gx.ravel().tolist(), xa.table.ravel().tolist()):
        name_x.setdefault(c, r)
    m = [-1] * xa.rank
    for c, r in zip(gy.ravel().tolist(), ya.table.ravel().tolist()):
        if c in name_x:
            m[name_x[c]] = r
    if -1 in m:
        return None
    try:
        return AlgebraicIso(xa, ya, tuple(m))
    except NotAnAlgebraicIsomorphism:
        return None


def _point_orbit_reps(n: int, perms: Iterable[Sequence[int]] | None) -> list[int]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for p in perms or ():
        for a, b in enumerate(p):
            ra, rb = find(a), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    return sorted({find(a) for a in range(n)})


def is_sesquiclosed_iso(
    phi: AlgebraicIso,
    source_symmetries: Iterable[Sequence[int]] | None = None,
    target_symmetries: Iterable[Sequence[int]] | None = None,
) -> bool:
    """Does ``phi`` have the ``(alpha, alpha')``-extension for all fiber-compatible pairs?

    ``source_symmetries`` / ``target_symmetries`` may list automorphisms that
    fix every basis relation (translations of a circulant scheme, say).  The
    existence of an extension is constant on their orbits, so the sweep only
    visits orbit representatives.
    """
    x, y = phi.source, phi.target
    src = _point_orbit_reps(x.n, source_symmetries)
    tgt = _point_orbit_reps(y.n, target_symmetries)
    for a in src:
        want = phi(x.table[a, a])
        for b in tgt:
            if y.table[b, b] != want:
                continue
            if extension_of(phi, a, b) is None:
                return False
    return True


def failing_pairs(phi: AlgebraicIso) -> list[tuple[int, int]]:
    """All fiber-compatible ``(alpha, alpha')`` without an extension."""
    x, y = phi.source, phi.target
    out = []
    for a in range(x.n):
        for b in range(y.n):
            if y.table[b, b] == phi(x.table[a, a]) and extension_of(phi, a, b) is None:
                out.append((a, b))
    return out


def is_sesquiclosed_cc(x: CoherentConfiguration, symmetries: Iterable[Sequence[int]] | None = None) -> bool:
    """Conditions S1 (point neighbourhoods are the fibers of the extension) and S2."""
    symmetries = list(symmetries or ())
    for a in _point_orbit_reps(x.n, symmetries):
        xa = point_extension(x, [a])
        fibers = {frozenset(f) for f in xa.fibers}
        neigh = {frozenset(np.nonzero(x.table[a] == s)[0].tolist()) for s in np.unique(x.table[a]).tolist()}
        if fibers != neigh:
            return False
    return is_sesquiclosed_iso(identity_iso(x), symmetries, symmetries)


# ---------------------------------------------------------------- combinatorial isomorphisms


def _graph_matrix(g: Graph) -> np.ndarray:
    return g.adjacency.astype(np.int64) + 2 * np.eye(g.n, dtype=np.int64)


def graph_isomorphisms(g: Graph, h: Graph, cap: int = DEFAULT_NODE_CAP) -> Iterator[tuple[int, ...]]:
    """Every arc-preserving bijection ``g -> h`` in deterministic order.

    Raises :class:`SearchLimitExceeded` when the node budget runs out.
    """
    if g.n != h.n or len(g.arcs) != len(h.arcs):
        return
    st = Structure(_graph_matrix(g), _graph_matrix(h), stats=SearchStats(cap=cap))
    for f in _search.isomorphisms(st):
        assert is_isomorphism(g, h, f), "search emitted a non-isomorphism"
        yield f


def find_graph_isomorphism(g: Graph, h: Graph, cap: int = DEFAULT_NODE_CAP) -> tuple[int, ...] | None:
    if g.n != h.n or len(g.arcs) != len(h.arcs):
        return None
    st = Structure(_graph_matrix(g), _graph_matrix(h), stats=SearchStats(cap=cap))
    f = _search.first_isomorphism(st)
    if f is not None:
        assert is_isomorphism(g, h, f), "search emitted a non-isomorphism"
    return f


@dataclass(frozen=True)
class AutomorphismGroup:
    generators: tuple[tuple[int, ...], ...]
    order: int
    base: tuple[int, ...] = ()
    nodes: int = 0


def _group(mat: np.ndarray, cap: int) -> AutomorphismGroup:
    d = _search.automorphism_group(mat, cap=cap)
    return AutomorphismGroup(tuple(d.generators), d.order, tuple(d.base), d.nodes)


def graph_automorphisms(g: Graph, cap: int = DEFAULT_NODE_CAP) -> AutomorphismGroup:
    return _group(_graph_matrix(g), cap)


def cc_automorphisms(x: CoherentConfiguration, cap: int = DEFAULT_NODE_CAP) -> AutomorphismGroup:
    """Permutations fixing every basis relation: generators and group order."""
    grp = _group(x.table, cap)
    for f in grp.generators:
        idx = np.asarray(f)
        assert np.array_equal(x.table[np.ix_(idx, idx)], x.table), "generator moves a basis relation"
    return grp


def pair_orbits(n: int, generators: Iterable[Sequence[int]]) -> np.ndarray:
    """Orbit labels of the group generated by ``generators`` on ``Omega^2``."""
    parent = np.arange(n * n)

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    a_idx, b_idx = np.divmod(np.arange(n * n), n)
    for f in generators:
        f = np.asarray(f)
        img = f[a_idx] * n + f[b_idx]
        for p, q in zip(range(n * n), img.tolist()):
            rp, rq = find(p), find(q)
            if rp != rq:
                parent[max(rp, rq)] = min(rp, rq)
    return canonical_labels(np.array([find(p) for p in range(n * n)])).reshape(n, n)


def is_schurian(x: CoherentConfiguration, cap: int = DEFAULT_NODE_CAP) -> bool:
    """Are the basis relations exactly the orbits of the automorphism group on pairs?"""
    grp = cc_automorphisms(x, cap)
    orbits = pair_orbits(x.n, grp.generators)
    return int(orbits.max()) + 1 == x.rank


def realizations(phi: AlgebraicIso, cap: int = DEFAULT_NODE_CAP, first_only: bool = True) -> list[tuple[int, ...]]:
    """Bijections ``f`` with ``s^f = phi(s)`` for every basis relation ``s``."""
    st = Structure(phi.apply_to_table(), phi.target.table, stats=SearchStats(cap=cap))
    out = []
    for f in _search.isomorphisms(st, first_only=first_only):
        out.append(f)
        if first_only:
            break
    return out


@dataclass
class SeparabilityReport:
    realized: list[tuple[AlgebraicIso, tuple[int, ...]]] = field(default_factory=list)
    unrealized: list[AlgebraicIso] = field(default_factory=list)
    undecided: list[AlgebraicIso] = field(default_factory=list)
    skipped: list[AlgebraicIso] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        """True when every checked isomorphism is realized (and none undecided)."""
        return not self.unrealized and not self.undecided

    def summary(self) -> dict:
        return {
            "realized": len(self.realized),
            "unrealized": len(self.unrealized),
            "undecided": len(self.undecided),
            "skipped_not_sesquiclosed": len(self.skipped),
        }


def separable_wrt(
    x: CoherentConfiguration,
    y: CoherentConfiguration,
    phis: Iterable[AlgebraicIso],
    cap: int = DEFAULT_NODE_CAP,
) -> SeparabilityReport:
    """For each given algebraic isomorphism decide whether a combinatorial one induces it."""
    rep = SeparabilityReport()
    for phi in phis:
        if phi.source != x or phi.target != y:
            raise ValueError("algebraic isomorphism does not go from x to y")
        try:
            found = realizations(phi, cap)
        except SearchLimitExceeded:
            rep.undecided.append(phi)
            continue
        if found:
            assert induced_algebraic_iso(found[0], x, y) == phi
            rep.realized.append((phi, found[0]))
        else:
            rep.unrealized.append(phi)
    return rep


def sesquiseparable_wrt(
    x: CoherentConfiguration,
    y: CoherentConfiguration,
    phis: Iterable[AlgebraicIso],
    cap: int = DEFAULT_NODE_CAP,
    source_symmetries: Iterable[Sequence[int]] | None = None,
    target_symmetries: Iterable[Sequence[int]] | None = None,
) -> SeparabilityReport:
    """As :func:`separable_wrt`, restricted to the sesquiclosed isomorphisms."""
    phis = list(phis)
    src = list(source_symmetries or ())
    tgt = list(target_symmetries or ())
    keep = [p for p in phis if is_sesquiclosed_iso(p, src, tgt)]
    rep = separable_wrt(x, y, keep, cap)
    rep.skipped = [p for p in phis if p not in keep]
    return rep


# ---------------------------------------------------------------- certificates


@dataclass
class IsoCertificate:
    verdict: str
    witness: tuple[int, ...] | None = None
    distinguisher: dict | None = None
    stats: dict = field(default_factory=dict)
    g: InitVar[Graph | None] = None
    h: InitVar[Graph | None] = None

    def __post_init__(self, g, h):
        if self.verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}")
        if self.witness is not None:
            self.witness = tuple(int(v) for v in self.witness)
            if g is None or h is None:
                raise ValueError("a witness must be checked against both graphs")
            if not is_isomorphism(g, h, self.witness):
                raise ValueError("witness does not map arcs onto arcs")

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": list(self.witness) if self.witness is not None else None,
            "distinguisher": self.distinguisher,
            "stats": self.stats,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------- independent oracle

ORACLE_CAP = 32


def _is_rotation_invariant(g: Graph) -> bool:
    n = g.n
    return all(((u + 1) % n, (v + 1) % n) in g.arcs for u, v in g.arcs)


def _vertex_invariants(n: int, out: list[int], inn: list[int]) -> list[tuple]:
    inv = []
    for v in range(n):
        und = out[v] | inn[v]
        tri = sum(bin(out[w] & und & ~(1 << v)).count("1") for w in range(n) if und >> w & 1 and w != v)
        inv.append((bin(out[v]).count("1"), bin(inn[v]).count("1"), out[v] >> v & 1, tri))
    return inv


def _masks(g: Graph) -> tuple[list[int], list[int]]:
    out = [0] * g.n
    inn = [0] * g.n
    for u, v in g.arcs:
        out[u] |= 1 << v
        inn[v] |= 1 << u
    return out, inn


def oracle_isomorphic(
    g: Graph, h: Graph, cap_n: int = ORACLE_CAP, node_cap: int = DEFAULT_NODE_CAP
) -> IsoCertificate:
    """Brute-force isomorphism test that shares no code with the refinement engine.

    Vertex invariants (degrees, loops, triangle counts) restrict the
    candidates; a backtracking search with forward checking on bitsets
    decides the rest.  When ``g`` is invariant under ``x -> x+1 mod n`` the
    image of vertex 0 is fixed, since any isomorphism can be composed with a
    rotation.  Inputs with ``n <= 8`` are also run through an exhaustive
    permutation scan as a cross-check.
    """
    stats = {"method": "oracle", "nodes": 0}
    if g.n != h.n or len(g.arcs) != len(h.arcs):
        return IsoCertificate("non-isomorphic", stats=stats | {"reason": "sizes differ"})
    n = g.n
    if n > cap_n:
        return IsoCertificate("undecided", stats=stats | {"reason": f"n = {n} exceeds oracle cap {cap_n}"})
    gout, gin = _masks(g)
    hout, hin = _masks(h)
    ig = _vertex_invariants(n, gout, gin)
    ih = _vertex_invariants(n, hout, hin)
    if sorted(ig) != sorted(ih):
        return IsoCertificate("non-isomorphic", stats=stats | {"reason": "vertex invariants differ"})
    full = (1 << n) - 1
    cand0 = []
    for v in range(n):
        m = 0
        for w in range(n):
            if ih[w] == ig[v]:
                m |= 1 << w
        cand0.append(m)
    if _is_rotation_invariant(g):
        w0 = min(w for w in range(n) if cand0[0] >> w & 1)
        cand0[0] = 1 << w0
    nodes = 0
    f = [-1] * n

    def search(cand: list[int], left: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > node_cap:
            raise SearchLimitExceeded(nodes)
        if left == 0:
            return True
        # most constrained unassigned vertex
        v = min((u for u in range(n) if f[u] < 0), key=lambda u: (bin(cand[u]).count("1"), u))
        m = cand[v]
        while m:
            low = m & -m
            w = low.bit_length() - 1
            m ^= low
            if (gout[v] >> v & 1) != (hout[w] >> w & 1):
                continue
            nc = cand[:]
            ok = True
            for u in range(n):
                if f[u] >= 0 or u == v:
                    continue
                c = nc[u] & ~low
                c &= hout[w] if gout[v] >> u & 1 else full & ~hout[w]
                c &= hin[w] if gin[v] >> u & 1 else full & ~hin[w]
                if not c:
                    ok = False
                    break
                nc[u] = c
            if not ok:
                continue
            f[v] = w
            if search(nc, left - 1):
                return True
            f[v] = -1
        return False

    try:
        found = search(cand0, n)
    except SearchLimitExceeded:
        return IsoCertificate("undecided", stats=stats | {"nodes": nodes, "reason": "node cap"})
    stats["nodes"] = nodes
    if n <= 8:
        brute = any(all((p[u], p[v]) in h.arcs for u, v in g.arcs) for p in permutations(range(n)))
        assert brute == found, "oracle backtracking disagrees with exhaustive scan"
    if found:
        return IsoCertificate("isomorphic", witness=tuple(f), stats=stats, g=g, h=h)
    return IsoCertificate("non-isomorphic", stats=stats | {"reason": "search exhausted"})
