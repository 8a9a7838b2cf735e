"""Circulant schemes: X-groups, radicals, normality, wedge decompositions,
admissible pairs, the decomposition tree and the 3-WL isomorphism test.

Subgroups of ``Z_n`` are identified by their order ``h``: the subgroup is
``{0, n/h, 2n/h, ...}``.  Cosets of the subgroup of order ``h`` are indexed
by ``x mod (n/h)``, which is also the order in which quotients list them.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from math import gcd
from typing import Mapping, Sequence

import numpy as np

from ._search import DEFAULT_NODE_CAP, SearchLimitExceeded
from .cc import (
    CoherentConfiguration,
    Parabolic,
    cc_of_graph,
    parabolic_from_blocks,
    quotient,
    radical,
    restriction,
    section,
)
from .graphs import ConnectionSet, Graph, apply_permutation, build_circulant, is_isomorphism, prime_power
from .iso import AlgebraicIso, IsoCertificate, cc_automorphisms, find_graph_isomorphism, oracle_isomorphic
from .wl import ResourceLimitError, wl_compare


class ClassificationError(RuntimeError):
    """A prime-power scheme that is neither trivial, normal nor a nontrivial wedge."""


class AdmissibilityError(ValueError):
    def __init__(self, message: str, delta: int | None = None):
        self.delta = delta
        super().__init__(message)


def subgroup(n: int, order: int) -> frozenset[int]:
    if order < 1 or n % order:
        raise ValueError(f"{order} does not divide {n}")
    return frozenset(range(0, n, n // order))


def units(n: int) -> list[int]:
    return [m for m in range(1, n) if gcd(m, n) == 1] if n > 1 else [0]


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


@dataclass(frozen=True, eq=False)
class CirculantScheme:
    """A translation-invariant scheme on ``Z_n``."""

    cc: CoherentConfiguration

    def __post_init__(self):
        t = self.cc.table
        n = t.shape[0]
        diff = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
        if not np.array_equal(t, t[0][diff]):
            raise AssertionError("configuration is not invariant under the translations of Z_n")

    @property
    def n(self) -> int:
        return self.cc.n

    @property
    def rank(self) -> int:
        return self.cc.rank

    def class_of(self, g: int) -> int:
        """Basis relation containing ``(0, g)``."""
        return int(self.cc.table[0, g % self.n])

    @cached_property
    def basic_sets(self) -> tuple[frozenset, ...]:
        out: list[set] = [set() for _ in range(self.rank)]
        for g, r in enumerate(self.cc.table[0].tolist()):
            out[r].add(g)
        return tuple(frozenset(s) for s in out)

    def translations(self) -> list[tuple[int, ...]]:
        n = self.n
        return [tuple((x + 1) % n for x in range(n))] if n > 1 else []

    def is_x_group(self, order: int) -> bool:
        if self.n % order:
            return False
        h = subgroup(self.n, order)
        return all(self.basic_sets[self.class_of(g)] <= h for g in h)

    @cached_property
    def xgroups(self) -> tuple[int, ...]:
        return tuple(d for d in divisors(self.n) if self.is_x_group(d))

    def parabolic(self, order: int) -> Parabolic:
        """The coset equivalence ``e(H)`` for the X-group of the given order."""
        q = self.n // order
        return parabolic_from_blocks(self.cc, [x % q for x in range(self.n)])

    @cached_property
    def class_radicals(self) -> tuple[int, ...]:
        """Order of the X-group ``H`` with ``rad(s) = e(H)``, per basis relation."""
        out = []
        for r in range(self.rank):
            e = radical(self.cc, {r})
            block = next(b for b in e.blocks if 0 in b)
            out.append(len(block))
        return tuple(out)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "rank": self.rank,
            "basic_sets": [sorted(s) for s in self.basic_sets],
            "xgroups": list(self.xgroups),
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, CirculantScheme):
            return NotImplemented
        return self.cc == other.cc

    def __hash__(self):
        return hash(self.cc)

    def __repr__(self) -> str:
        return f"CirculantScheme(n={self.n}, rank={self.rank}, xgroups={list(self.xgroups)})"


def scheme_from_cayley(c: ConnectionSet) -> CirculantScheme:
    return CirculantScheme(cc_of_graph(build_circulant(c)))


def scheme_from_partition(n: int, basic_sets: Sequence[Sequence[int]]) -> CirculantScheme:
    """Scheme whose basic sets are given explicitly (validated)."""
    lab = np.full(n, -1, dtype=np.int64)
    for i, s in enumerate(basic_sets):
        for g in s:
            if lab[g % n] != -1:
                raise ValueError(f"{g} lies in two basic sets")
            lab[g % n] = i
    if (lab < 0).any():
        raise ValueError("basic sets do not cover Z_n")
    diff = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return CirculantScheme(CoherentConfiguration(lab[diff]))


def thin_scheme(n: int) -> CirculantScheme:
    return scheme_from_partition(n, [[g] for g in range(n)])


def trivial_scheme(n: int) -> CirculantScheme:
    return scheme_from_partition(n, [[0], list(range(1, n))] if n > 1 else [[0]])


def x_groups(s: CirculantScheme) -> tuple[int, ...]:
    return s.xgroups


def scheme_radical(s: CirculantScheme) -> int:
    """Order of the radical: ``rad(r(0, g))`` for any generator ``g`` of ``Z_n``."""
    if s.n <= 1:
        return 1
    values = {s.class_radicals[s.class_of(g)] for g in units(s.n)}
    if len(values) != 1:
        raise AssertionError(f"radical depends on the generator: {sorted(values)}")
    return values.pop()


def multipliers(s: CirculantScheme) -> list[int]:
    """Units ``m`` with ``mT = T`` for every basic set ``T``."""
    row = s.cc.table[0]
    idx = np.arange(s.n)
    return [m for m in units(s.n) if np.array_equal(row[(m * idx) % s.n], row)]


def is_normal(s: CirculantScheme, cap: int = DEFAULT_NODE_CAP) -> bool:
    """Does every automorphism fixing 0 act as ``x -> mx``?

    The stabilizer has order ``|Aut| / n`` and contains the multipliers that
    preserve every basic set, so normality is equality of the two orders.
    """
    if s.n <= 1:
        return True
    grp = cc_automorphisms(s.cc, cap)
    return grp.order // s.n == len(multipliers(s))


def _check_pair(s: CirculantScheme, L: int, U: int) -> None:
    if U % L:
        raise ValueError(f"L (order {L}) is not contained in U (order {U})")
    for h in (L, U):
        if not s.is_x_group(h):
            raise ValueError(f"subgroup of order {h} is not an X-group")


def e1e0_condition(s: CirculantScheme, L: int, U: int) -> bool:
    """Every basis relation missing ``e(U)`` has a radical containing ``e(L)``."""
    _check_pair(s, L, U)
    u = subgroup(s.n, U)
    for r, t in enumerate(s.basic_sets):
        if not (t & u) and s.class_radicals[r] % L:
            return False
    return True


def is_nontrivial_wreath(s: CirculantScheme) -> bool:
    """Is there an X-group ``1 < H < Z_n`` with the ``e(H)/e(H)``-condition?"""
    return any(1 < h < s.n and e1e0_condition(s, h, h) for h in s.xgroups)


def generated_xgroup(s: CirculantScheme, r: int) -> int:
    """Order of the least X-group containing the basic set ``T_r``."""
    t = s.basic_sets[r]
    return min(h for h in s.xgroups if t <= subgroup(s.n, h))


def quotient_scheme(s: CirculantScheme, L: int) -> CirculantScheme:
    """``X_{G/L}``; coset ``x + L`` becomes the point ``x mod (n/|L|)``."""
    return CirculantScheme(quotient(s.cc, s.parabolic(L)))


def restricted_scheme(s: CirculantScheme, U: int) -> CirculantScheme:
    """``X_U``; the element ``k * n/|U|`` becomes the point ``k``."""
    return CirculantScheme(restriction(s.cc, sorted(subgroup(s.n, U))))


def section_scheme(s: CirculantScheme, U: int, L: int) -> CirculantScheme:
    """``X_{U/L}`` on ``Z_{|U|/|L|}``."""
    _check_pair(s, L, U)
    return CirculantScheme(section(s.cc, sorted(subgroup(s.n, U)), s.parabolic(L)))


def sections(s: CirculantScheme) -> list[tuple[int, int]]:
    """All pairs ``(U, L)`` of X-groups with ``L <= U``."""
    xs = s.xgroups
    return [(u, l) for u in xs for l in xs if u % l == 0]


def is_dense(s: CirculantScheme) -> bool:
    """No section of composite order carries the trivial scheme."""
    for u, l in sections(s):
        k = u // l
        if k > 1 and prime_power(k) != (k, 1) and section_scheme(s, u, l).rank == 2:
            return False
    return True


def is_subnormal_section(s: CirculantScheme, U: int, L: int) -> bool:
    """Is some section ``U'/L'`` containing ``U/L`` (``L' <= L <= U <= U'``) normal?"""
    for u2, l2 in sections(s):
        if u2 % U == 0 and L % l2 == 0 and is_normal(section_scheme(s, u2, l2)):
            return True
    return False


@dataclass(frozen=True)
class WedgeCertificate:
    U: int
    L: int
    operand0: CirculantScheme = field(repr=False)
    operand1: CirculantScheme = field(repr=False)
    nontrivial: bool

    def to_dict(self) -> dict:
        return {"U": self.U, "L": self.L, "nontrivial": self.nontrivial}


def wedge_decompositions(s: CirculantScheme) -> list[WedgeCertificate]:
    """All ``(L, U)`` satisfying the ``e(U)/e(L)``-condition, with both operands."""
    out = []
    for u, l in sorted(sections(s), key=lambda p: (p[1], p[0])):
        if e1e0_condition(s, l, u):
            out.append(
                WedgeCertificate(
                    U=u,
                    L=l,
                    operand0=quotient_scheme(s, l),
                    operand1=restricted_scheme(s, u),
                    nontrivial=1 < l and u < s.n,
                )
            )
    return out


# ---------------------------------------------------------------- admissible pairs


def assemble_from_admissible(
    n: int,
    L: int,
    U: int,
    f0: Sequence[int],
    f_delta: Mapping[int, Mapping[int, int]],
) -> tuple[int, ...]:
    """Glue a map of ``L``-cosets with maps of the ``U``-cosets into one bijection.

    ``f0[i]`` is the image of the coset ``i + L`` (cosets indexed by
    ``x mod n/|L|``); ``f_delta[j]`` maps the points of the ``U``-coset with
    index ``j = x mod n/|U|`` into ``Z_n``.  Every ``f_delta`` must induce
    ``f0`` on the ``L``-cosets inside its coset.
    """
    if U % L or n % U:
        raise ValueError("need L <= U <= Z_n")
    qL, qU = n // L, n // U
    if sorted(int(v) for v in f0) != list(range(qL)):
        raise ValueError("f0 is not a permutation of the L-cosets")
    f = [-1] * n
    for j in range(qU):
        if j not in f_delta:
            raise AdmissibilityError(f"no map given for the U-coset {j} + U", j)
        fd = f_delta[j]
        delta = [x for x in range(n) if x % qU == j]
        if sorted(fd) != delta:
            raise AdmissibilityError(f"map for coset {j} + U does not cover it", j)
        for x in delta:
            y = int(fd[x])
            if y % qL != f0[x % qL]:
                raise AdmissibilityError(
                    f"map for coset {j} + U sends {x} to {y}, against f0 on the L-cosets", j
                )
            f[x] = y
    if sorted(f) != list(range(n)):
        raise AdmissibilityError("assembled map is not a bijection")
    return tuple(f)


def _class_sets(s: CirculantScheme, L: int) -> list[frozenset]:
    """``M[k]``: basis relations meeting ``(0 + L) x (k + L)``."""
    q = s.n // L
    row = s.cc.table[0]
    return [frozenset(row[[k + q * i for i in range(L)]].tolist()) for k in range(q)]


def admissible_sides(
    s: CirculantScheme,
    s2: CirculantScheme,
    phi: AlgebraicIso,
    L: int,
    U: int,
    perms: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """For each row ``f`` of ``perms``: (f in iso(s, s2, phi), f splits into an admissible pair
    whose parts lie in iso(X_0, X_0', phi_0) and iso(X_D, X'_D', phi_D))."""
    _check_pair(s, L, U)
    if s2.n != s.n:
        raise ValueError("schemes on different groups")
    n = s.n
    P = np.atleast_2d(np.asarray(perms, dtype=np.int64))
    phimap = np.asarray(phi.mapping, dtype=np.int64)
    want = phimap[s.cc.table]
    t2 = s2.cc.table
    img = t2[P[:, :, None], P[:, None, :]]
    lhs = (img == want[None]).all(axis=(1, 2))

    qL, qU = n // L, n // U
    x = np.arange(n)
    # f permutes the L-cosets and the U-cosets
    blocks_ok = ((P % qL) == (P[:, x % qL] % qL)).all(axis=1) & ((P % qU) == (P[:, x % qU] % qU)).all(axis=1)
    # restrictions: pairs inside one U-coset
    same_u = (x[:, None] % qU) == (x[None, :] % qU)
    restr_ok = ((img == want[None]) | ~same_u[None]).all(axis=(1, 2))
    # quotient: sets of relations between L-cosets, renamed by phi
    ms, ms2 = _class_sets(s, L), _class_sets(s2, L)
    ids: dict[frozenset, int] = {}
    q_phi = np.array([ids.setdefault(frozenset(phimap[list(m)].tolist()), len(ids)) for m in ms])
    q_2 = np.array([ids.setdefault(m, len(ids)) for m in ms2])
    ci = np.arange(qL)
    diff = (ci[None, :] - ci[:, None]) % qL
    f0 = P[:, :qL] % qL
    quot_ok = (q_2[(f0[:, None, :] - f0[:, :, None]) % qL] == q_phi[diff][None]).all(axis=(1, 2))
    rhs = blocks_ok & restr_ok & quot_ok
    return lhs, rhs


@dataclass(frozen=True)
class AdmissibleCheck:
    in_iso: bool
    admissible: bool

    @property
    def holds(self) -> bool:
        return self.in_iso == self.admissible

    def __bool__(self) -> bool:
        return self.holds


def admissible_pair_criterion(
    s: CirculantScheme,
    s2: CirculantScheme,
    phi: AlgebraicIso,
    f: Sequence[int],
    L: int,
    U: int,
) -> AdmissibleCheck:
    """Evaluate both sides of the admissible-pair characterization for one bijection.

    Needs the ``e(U)/e(L)``-condition on ``s``.
    """
    if not e1e0_condition(s, L, U):
        raise ValueError(f"scheme does not satisfy the e(U)/e(L)-condition for U={U}, L={L}")
    lhs, rhs = admissible_sides(s, s2, phi, L, U, np.asarray([f]))
    return AdmissibleCheck(bool(lhs[0]), bool(rhs[0]))


# ---------------------------------------------------------------- classification


@dataclass(frozen=True)
class DecompositionTree:
    kind: str  # Trivial | Normal | Wedge | Undecomposed
    n: int
    rank: int
    radical: int
    normal: bool
    U: int | None = None
    L: int | None = None
    children: tuple[DecompositionTree, ...] = ()
    non_prime_power: bool = False

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "n": self.n,
            "rank": self.rank,
            "radical": self.radical,
            "normal": self.normal,
            "U": self.U,
            "L": self.L,
        }
        if self.non_prime_power:
            d["non_prime_power"] = True
        if self.children:
            d["children"] = [c.to_dict() for c in self.children]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def leaves(self) -> list[DecompositionTree]:
        if not self.children:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]


def choose_wedge(s: CirculantScheme, wedges: Sequence[WedgeCertificate]) -> WedgeCertificate | None:
    """Widest nontrivial split: maximize ``|U| + (n - |L|)``, then least ``(|U|, |L|)``."""
    cands = [w for w in wedges if w.nontrivial]
    if not cands:
        return None
    return min(cands, key=lambda w: (-(w.U + s.n - w.L), w.U, w.L))


def classify(s: CirculantScheme, cap: int = DEFAULT_NODE_CAP) -> DecompositionTree:
    """Trivial leaf, Normal leaf, or a nontrivial wedge with classified operands."""
    npp = s.n > 1 and prime_power(s.n) is None
    rad = scheme_radical(s)
    if s.rank <= 2:
        return DecompositionTree("Trivial", s.n, s.rank, rad, s.n <= 3, non_prime_power=npp)
    normal = is_normal(s, cap)
    if normal:
        return DecompositionTree("Normal", s.n, s.rank, rad, True, non_prime_power=npp)
    w = choose_wedge(s, wedge_decompositions(s))
    if w is None:
        if not npp:
            raise ClassificationError(
                f"scheme of prime-power order {s.n} is neither trivial, normal nor a nontrivial wedge"
            )
        warnings.warn(
            f"order {s.n} is not a prime power; scheme left undecomposed", stacklevel=2
        )
        return DecompositionTree("Undecomposed", s.n, s.rank, rad, False, non_prime_power=True)
    kids = (classify(w.operand0, cap), classify(w.operand1, cap))
    return DecompositionTree("Wedge", s.n, s.rank, rad, False, w.U, w.L, kids, non_prime_power=npp)


# ---------------------------------------------------------------- isomorphism test


def _multiplier_witness(g: Graph, h: Graph) -> tuple[int, ...] | None:
    n = g.n
    for m in units(n):
        f = tuple((m * x) % n for x in range(n))
        if is_isomorphism(g, h, f):
            return f
    return None


def iso_test(
    c: ConnectionSet,
    h: Graph,
    cap_tuples: int | None = None,
    cap_nodes: int = DEFAULT_NODE_CAP,
    oracle_cap: int = 32,
) -> IsoCertificate:
    """Decide ``Cay(Z_n, c) ~ h`` for prime-power ``n`` by 3-WL equivalence.

    An isomorphism witness is looked for among the multipliers first and by
    individualization-refinement otherwise.  Within the oracle cap the
    brute-force oracle is consulted and a disagreement is a hard error.
    """
    n = c.modulus
    if prime_power(n) is None:
        raise ValueError(f"modulus {n} is not a prime power")
    g = build_circulant(c)
    stats: dict = {"method": "wl3"}
    try:
        cmp = wl_compare(g, h, 3, cap_tuples)
    except ResourceLimitError as exc:
        return IsoCertificate("undecided", stats=stats | {"reason": str(exc)})
    stats["rounds"] = cmp.rounds
    if cmp.equivalent:
        witness = _multiplier_witness(g, h)
        if witness is None:
            try:
                witness = find_graph_isomorphism(g, h, cap_nodes)
            except SearchLimitExceeded as exc:
                return IsoCertificate(
                    "undecided",
                    stats=stats | {"reason": "witness search exceeded node cap", "nodes": exc.nodes, "wl3_equivalent": True},
                )
            if witness is None:
                raise AssertionError("3-WL-equivalent to a prime-power circulant graph but not isomorphic")
        cert = IsoCertificate("isomorphic", witness=witness, stats=stats, g=g, h=h)
    else:
        cert = IsoCertificate("non-isomorphic", distinguisher=cmp.distinguisher(), stats=stats)
    if n <= oracle_cap:
        o = oracle_isomorphic(g, h, cap_n=oracle_cap, node_cap=cap_nodes)
        if o.verdict != "undecided" and o.verdict != cert.verdict:
            raise AssertionError(f"oracle says {o.verdict}, 3-WL says {cert.verdict}")
        cert.stats["oracle"] = o.verdict
    return cert


def relabeled_circulant(c: ConnectionSet, f: Sequence[int]) -> Graph:
    return apply_permutation(build_circulant(c), f)


def multiplier_image(s: CirculantScheme, m: int) -> CirculantScheme:
    """Image of the scheme under ``x -> mx`` for a unit ``m``."""
    if gcd(m, s.n) != 1:
        raise ValueError(f"{m} is not a unit modulo {s.n}")
    return CirculantScheme(s.cc.relabeled([(m * x) % s.n for x in range(s.n)]))
