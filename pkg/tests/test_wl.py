from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wlcirc.cc import cc_of_graph, point_extension
from wlcirc.graphs import Graph, apply_permutation, build_circulant, ConnectionSet, complete, cycle, disjoint_union
from wlcirc.wl import (
    ResourceLimitError,
    TupleColoring,
    TuplePartition,
    initial_coloring,
    refine_round,
    residue,
    skeleton,
    stable_coloring,
    wl_compare,
    wl_equivalence_classes,
    wl_equivalent,
    wl_fingerprint,
)


def naive_signature(g: Graph, x: tuple[int, ...]) -> tuple:
    m = len(x)
    eq = tuple(x[i] == x[j] for i in range(m) for j in range(m))
    arc = tuple((x[i], x[j]) in g.arcs for i in range(m) for j in range(m))
    return eq, arc


def naive_stable(g: Graph, m: int) -> dict[tuple, int]:
    """Folklore refinement with plain dictionaries."""
    n = g.n
    tuples = list(itertools.product(range(n), repeat=m))
    col = {x: naive_signature(g, x) for x in tuples}
    if m == 1:
        col = {x: (x[0] in {u for u, v in g.arcs if u == v},) for x in tuples}
    while True:
        new = {}
        for x in tuples:
            if m == 1:
                v = x[0]
                outs = sorted(col[(w,)] for w in range(n) if (v, w) in g.arcs)
                ins = sorted(col[(w,)] for w in range(n) if (w, v) in g.arcs)
                new[x] = (col[x], tuple(outs), tuple(ins))
            else:
                ms = sorted(tuple(col[x[:i] + (a,) + x[i + 1:]] for i in range(m)) for a in range(n))
                new[x] = (col[x], tuple(ms))
        if len(set(new.values())) == len(set(col.values())):
            return col
        col = new


def as_partition(col: dict[tuple, int]) -> set[frozenset]:
    groups: dict = {}
    for x, c in col.items():
        groups.setdefault(c, set()).add(x)
    return {frozenset(v) for v in groups.values()}


def test_initial_coloring_examples():
    assert initial_coloring(complete(4), 2).num_classes == 2
    assert initial_coloring(cycle(5), 2).num_classes == 3
    c5 = cycle(5)
    expected = len({naive_signature(c5, x) for x in itertools.product(range(5), repeat=3)})
    assert initial_coloring(c5, 3).num_classes == expected


def test_stable_coloring_examples():
    assert stable_coloring(cycle(5), 2).num_classes == 3
    assert stable_coloring(complete(4), 2).num_classes == 2
    assert stable_coloring(Graph(3, frozenset()), 1).num_classes == 1


def test_refine_round():
    g = disjoint_union(cycle(6), cycle(3), cycle(3))
    c0 = initial_coloring(g, 2)
    c1 = refine_round(g, c0)
    assert c1.num_classes > c0.num_classes
    assert c1.round == 1
    s = stable_coloring(g, 2)
    again = refine_round(g, s)
    assert again.partition() == s.partition() and again.stable
    disc = stable_coloring(build_circulant(ConnectionSet(5, {1})), 1)
    assert disc.num_classes == 1
    asym = Graph(3, frozenset({(0, 1), (1, 2), (0, 2)}))
    d = stable_coloring(asym, 1)
    assert d.num_classes == 3 and refine_round(asym, d).num_classes == 3


def test_wl_equivalent_examples():
    c6, two_c3 = cycle(6), disjoint_union(cycle(3), cycle(3))
    assert wl_equivalent(c6, two_c3, 1)
    assert not wl_equivalent(c6, two_c3, 2)
    cmp = wl_compare(c6, two_c3, 2)
    assert cmp.rounds == 1
    d = cmp.distinguisher()
    assert d["m"] == 2 and d["histogram_diff"]
    assert not wl_compare(cycle(5), cycle(6), 2).equivalent


def test_wl_equivalent_under_relabeling():
    g = build_circulant(ConnectionSet(9, {1, 3, 8}))
    f = [4, 7, 1, 0, 8, 2, 6, 5, 3]
    for m in (1, 2, 3):
        assert wl_equivalent(g, apply_permutation(g, f), m)


def test_skeleton_examples():
    c = stable_coloring(cycle(5), 3)
    assert skeleton(c, 3) == c.partition()
    sk = skeleton(c, 2)
    assert sk == stable_coloring(cycle(5), 2).partition()
    assert sk.num_classes == 3
    assert skeleton(stable_coloring(complete(4), 3), 2).num_classes == 2


def test_residue_examples():
    c = stable_coloring(cycle(5), 3)
    r = residue(c, (0,))
    assert frozenset({(0, 0)}) in {frozenset(cl) for cl in r.classes()}
    assert r.refines(skeleton(c, 2))
    k = stable_coloring(complete(4), 3)
    classes = {frozenset(cl) for cl in residue(k, (0,)).classes()}
    naive: dict = {}
    for a, b in itertools.product(range(4), repeat=2):
        naive.setdefault(int(k.grid()[a, b, 0]), set()).add((a, b))
    assert classes == {frozenset(v) for v in naive.values()}
    assert frozenset({(0, 0)}) in classes
    assert frozenset({(1, 1), (2, 2), (3, 3)}) in classes


def test_tuple_cap():
    with pytest.raises(ResourceLimitError):
        stable_coloring(cycle(30), 3, cap=1000)


def test_coloring_exports():
    c = stable_coloring(cycle(5), 2)
    assert sum(c.class_sizes()) == 25
    assert c.header()
    lines = c.to_csv().strip().splitlines()
    assert len(lines) >= 25


def test_fingerprint_and_classes():
    gs = [cycle(6), disjoint_union(cycle(3), cycle(3)), apply_permutation(cycle(6), [1, 0, 2, 3, 4, 5][::-1])]
    assert wl_fingerprint(gs[0], 2) == wl_fingerprint(gs[2], 2)
    assert wl_equivalence_classes(gs, 2) == [0, 1, 0]
    assert wl_equivalence_classes(gs, 1) == [0, 0, 0]


@st.composite
def small_graphs(draw):
    n = draw(st.integers(1, 7))
    cells = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    return Graph(n, frozenset((i // n, i % n) for i, b in enumerate(cells) if b))


@given(small_graphs(), st.sampled_from([1, 2]))
def test_stable_partition_matches_naive(g, m):
    c = stable_coloring(g, m)
    ours = {frozenset(map(tuple, cl)) for cl in c.partition().classes()}
    assert ours == as_partition(naive_stable(g, m))


@given(small_graphs(), st.randoms(use_true_random=False))
def test_equivalence_invariant_under_permutation(g, rnd):
    f = list(range(g.n))
    rnd.shuffle(f)
    h = apply_permutation(g, f)
    assert wl_equivalent(g, h, 2)
    assert wl_fingerprint(g, 2) == wl_fingerprint(h, 2)


@given(small_graphs())
def test_skeleton_and_residue_inequalities(g):
    c3 = stable_coloring(g, 3)
    c2 = stable_coloring(g, 2)
    assert skeleton(c3, 2).refines(c2.partition())
    x = cc_of_graph(g)
    for a in range(g.n):
        ext = point_extension(x, [a])
        assert residue(c3, (a,)).refines(TuplePartition(2, g.n, ext.table))
