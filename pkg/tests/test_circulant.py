from __future__ import annotations

import itertools
import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wlcirc.cc import (
    is_partly_regular,
    parabolic_from_blocks,
    point_extension,
    section,
    trivial,
)
from wlcirc.circulant import (
    AdmissibilityError,
    CirculantScheme,
    admissible_pair_criterion,
    admissible_sides,
    assemble_from_admissible,
    choose_wedge,
    classify,
    divisors,
    e1e0_condition,
    generated_xgroup,
    is_dense,
    is_normal,
    is_nontrivial_wreath,
    is_subnormal_section,
    iso_test,
    multiplier_image,
    multipliers,
    quotient_scheme,
    relabeled_circulant,
    restricted_scheme,
    scheme_from_cayley,
    scheme_from_partition,
    scheme_radical,
    section_scheme,
    sections,
    subgroup,
    thin_scheme,
    trivial_scheme,
    units,
    wedge_decompositions,
    x_groups,
)
from wlcirc.corpus import scheme_corpus
from wlcirc.graphs import ConnectionSet, Graph, build_circulant, cycle, disjoint_union, prime_power
from wlcirc.iso import cc_automorphisms, identity_iso, is_schurian, is_sesquiclosed_cc, realizations


def cay(n: int, *elements: int) -> CirculantScheme:
    return scheme_from_cayley(ConnectionSet(n, frozenset(elements)))


def wreath4() -> CirculantScheme:
    return cay(4, 1, 3)


def section_cc(cc, n: int, u: int, l: int):
    """Section U/L of a configuration on Z_n, cosets of L indexed by x mod n/l."""
    return section(cc, sorted(subgroup(n, u)), parabolic_from_blocks(cc, [x % (n // l) for x in range(n)]))


# ---------------------------------------------------------------- schemes and X-groups


def test_scheme_from_cayley_examples():
    s = wreath4()
    assert s.rank == 3
    assert sorted(map(sorted, s.basic_sets)) == [[0], [1, 3], [2]]
    assert cay(5, 1, 4).rank == 3
    assert cay(4, 1, 2, 3) == trivial_scheme(4)
    assert trivial_scheme(4).cc == trivial(4)


def test_translation_invariance_is_enforced():
    from wlcirc.cc import point_extension as pe

    with pytest.raises(AssertionError):
        CirculantScheme(pe(thin_scheme(4).cc, [0]))


@given(st.integers(3, 12), st.integers(0, 2**16))
def test_translations_fix_every_class(n, mask):
    c = ConnectionSet(n, frozenset(g for g in range(1, n) if mask >> g & 1))
    s = scheme_from_cayley(c)
    for f in s.translations():
        idx = np.asarray(f)
        assert np.array_equal(s.cc.table[np.ix_(idx, idx)], s.cc.table)
    t = s.cc.table
    assert np.array_equal(t, t.T[np.ix_(range(n), range(n))].T)
    # commutative: c_rs^t = c_sr^t
    for (r, q, u), v in s.cc.constants.items():
        assert s.cc.constants.get((q, r, u), 0) == v


def test_x_groups_examples():
    assert x_groups(thin_scheme(8)) == (1, 2, 4, 8)
    assert x_groups(trivial_scheme(8)) == (1, 8)
    assert x_groups(wreath4()) == (1, 2, 4)
    assert [sorted(subgroup(4, h)) for h in x_groups(wreath4())] == [[0], [0, 2], [0, 1, 2, 3]]


def test_x_groups_form_a_lattice():
    for n in (8, 9, 16):
        for s in scheme_corpus(n):
            xs = set(x_groups(s))
            assert 1 in xs and n in xs
            for a, b in itertools.combinations(xs, 2):
                assert np.gcd(a, b) in xs
                assert np.lcm(a, b) in xs


def test_scheme_radical_examples():
    assert scheme_radical(thin_scheme(6)) == 1
    assert scheme_radical(wreath4()) == 2
    assert scheme_radical(trivial_scheme(4)) == 1


def test_is_normal_examples():
    assert is_normal(thin_scheme(8))
    assert not is_normal(trivial_scheme(5))
    assert is_normal(trivial_scheme(3))
    assert sorted(multipliers(trivial_scheme(5))) == [1, 2, 3, 4]


def test_normal_means_stabilizer_is_multipliers():
    for s in scheme_corpus(8) + scheme_corpus(9):
        order = cc_automorphisms(s.cc).order
        assert is_normal(s) == (order == s.n * len(multipliers(s)))


def test_e1e0_examples():
    s = wreath4()
    assert all(e1e0_condition(s, 1, u) for u in x_groups(s))
    assert e1e0_condition(s, 2, 2)
    assert not e1e0_condition(thin_scheme(4), 2, 2)
    with pytest.raises(ValueError):
        e1e0_condition(thin_scheme(8), 4, 2)
    with pytest.raises(ValueError):
        e1e0_condition(trivial_scheme(8), 2, 2)


def test_wedge_decomposition_examples():
    assert not any(w.nontrivial for w in wedge_decompositions(thin_scheme(4)))
    ws = wedge_decompositions(wreath4())
    assert any(w.nontrivial and (w.U, w.L) == (2, 2) for w in ws)
    assert not any(w.nontrivial for w in wedge_decompositions(trivial_scheme(7)))
    w = choose_wedge(wreath4(), ws)
    assert (w.U, w.L) == (2, 2)
    assert w.operand0.n == 2 and w.operand1.n == 2
    assert w.to_dict() == {"U": 2, "L": 2, "nontrivial": True}


def test_wedge_operands():
    for s in scheme_corpus(16):
        for w in wedge_decompositions(s):
            assert e1e0_condition(s, w.L, w.U)
            assert w.operand0 == quotient_scheme(s, w.L)
            assert w.operand1 == restricted_scheme(s, w.U)
            assert w.operand0.n == s.n // w.L and w.operand1.n == w.U


def test_sections_and_density():
    s = thin_scheme(8)
    assert (8, 1) in sections(s) and (4, 2) in sections(s)
    assert section_scheme(s, 4, 2) == thin_scheme(2)
    assert is_subnormal_section(s, 8, 1)
    assert is_dense(thin_scheme(8)) and is_dense(trivial_scheme(5))
    # a composite-order section carrying the trivial scheme
    assert not is_dense(trivial_scheme(4))


# ---------------------------------------------------------------- admissible pairs


def admissible_pairs_z4():
    """Every admissible pair for the wreath scheme on Z_4 with L = U = {0, 2}."""
    out = []
    for f0 in itertools.permutations(range(2)):
        maps = []
        for j in range(2):
            src = [j, j + 2]
            dst = [f0[j], f0[j] + 2]
            maps.append([dict(zip(src, p)) for p in itertools.permutations(dst)])
        for a, b in itertools.product(*maps):
            out.append(assemble_from_admissible(4, 2, 2, f0, {0: a, 1: b}))
    return out


def test_assemble_identity():
    f = assemble_from_admissible(4, 2, 2, [0, 1], {0: {0: 0, 2: 2}, 1: {1: 1, 3: 3}})
    assert f == (0, 1, 2, 3)


def test_assemble_swap_inside_blocks():
    s = wreath4()
    f = assemble_from_admissible(4, 2, 2, [0, 1], {0: {0: 2, 2: 0}, 1: {1: 3, 3: 1}})
    assert f == (2, 3, 0, 1)
    assert realizations(identity_iso(s.cc), first_only=False).count(f) == 1


def test_assembled_pairs_are_the_automorphisms():
    pairs = admissible_pairs_z4()
    assert len(set(pairs)) == 8
    assert cc_automorphisms(wreath4().cc).order == 8
    assert sorted(pairs) == sorted(realizations(identity_iso(wreath4().cc), first_only=False))


def test_assemble_incompatible():
    with pytest.raises(AdmissibilityError) as err:
        assemble_from_admissible(4, 2, 2, [1, 0], {0: {0: 2, 2: 0}, 1: {1: 3, 3: 1}})
    assert err.value.delta == 0
    with pytest.raises(AdmissibilityError):
        assemble_from_admissible(4, 2, 2, [0, 1], {0: {0: 0, 2: 2}})
    with pytest.raises(ValueError):
        assemble_from_admissible(4, 2, 2, [0, 0], {})


def test_admissible_criterion_examples():
    s = wreath4()
    phi = identity_iso(s.cc)
    ident = admissible_pair_criterion(s, s, phi, (0, 1, 2, 3), 2, 2)
    assert ident.in_iso and ident.admissible and ident
    swap = admissible_pair_criterion(s, s, phi, (1, 0, 2, 3), 2, 2)
    assert not swap.in_iso and not swap.admissible and swap
    with pytest.raises(ValueError):
        admissible_pair_criterion(thin_scheme(4), thin_scheme(4), identity_iso(thin_scheme(4).cc), (0, 1, 2, 3), 2, 2)


def test_admissible_sides_full_enumeration_z4():
    s = wreath4()
    perms = np.array(list(itertools.permutations(range(4))))
    lhs, rhs = admissible_sides(s, s, identity_iso(s.cc), 2, 2, perms)
    assert np.array_equal(lhs, rhs)
    assert int(lhs.sum()) == 8


def test_admissible_sides_sampled_z16():
    rng = np.random.default_rng(16)
    from wlcirc.iso import algebraic_isos

    checked = 0
    for s in scheme_corpus(16)[::4]:
        ws = [w for w in wedge_decompositions(s) if w.nontrivial]
        if not ws:
            continue
        phi = algebraic_isos(s.cc, s.cc)[-1]
        f = np.asarray(realizations(phi)[0])
        gens = [np.asarray(g) for g in cc_automorphisms(s.cc).generators]
        auts = [tuple(f.tolist())]
        for _ in range(19):
            a = gens[int(rng.integers(len(gens)))] if gens else np.arange(16)
            auts.append(tuple(a[np.asarray(auts[-1])].tolist()))
        perms = np.array(auts + [tuple(rng.permutation(16).tolist()) for _ in range(20)])
        for w in ws:
            lhs, rhs = admissible_sides(s, s, phi, w.L, w.U, perms)
            assert np.array_equal(lhs, rhs)
            assert lhs[: len(auts)].all()
            checked += 1
    assert checked > 0


# ---------------------------------------------------------------- classification


def test_classify_examples():
    assert classify(trivial_scheme(9)).kind == "Trivial"
    assert classify(thin_scheme(8)).kind == "Normal"
    tree = classify(wreath4())
    # Aut is the dihedral group of order 8 with stabilizer {1, x -> 3x}, so the scheme is normal
    assert tree.kind == "Normal" and tree.radical == 2
    assert json.loads(tree.to_json())["kind"] == "Normal"


def test_classify_builds_wedges_for_non_normal_schemes():
    s = scheme_from_partition(9, [[0], [3, 6], [1, 2, 4, 5, 7, 8]])
    assert not is_normal(s)
    tree = classify(s)
    assert tree.kind == "Wedge"
    assert (tree.U, tree.L) == (3, 3)
    assert [c.kind for c in tree.children] == ["Trivial", "Trivial"]
    d = tree.to_dict()
    assert d["children"][0]["n"] == 3 and d["U"] == 3


def test_classify_corpus():
    for n in (8, 9, 16, 25, 27):
        for s in scheme_corpus(n):
            tree = classify(s)
            for leaf in tree.leaves():
                assert leaf.kind in ("Trivial", "Normal")
                assert leaf.rank <= 2 or leaf.normal


def test_classify_non_prime_power():
    s = trivial_scheme(6)
    assert classify(s).non_prime_power
    assert classify(cay(12, 1, 11)).non_prime_power
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for s in scheme_corpus(10):
            tree = classify(s)
            assert tree.non_prime_power


# ---------------------------------------------------------------- structural properties


def test_radical_monotonicity():
    for n in (9, 25, 27):
        for s in scheme_corpus(n):
            for a in range(s.rank):
                for b in range(s.rank):
                    if generated_xgroup(s, b) % generated_xgroup(s, a) == 0:
                        assert s.class_radicals[b] % s.class_radicals[a] == 0


def test_nontrivial_wreath_lifts_from_sections():
    lifts = 0
    for n in (9, 25, 27):
        for s in scheme_corpus(n):
            for u, l in sections(s):
                if u > l and is_nontrivial_wreath(section_scheme(s, u, l)):
                    assert is_nontrivial_wreath(s)
                    lifts += 1
    assert lifts > 0


def test_schurity_of_wedge_operands():
    checked = 0
    for n in (8, 9, 16):
        for s in scheme_corpus(n):
            for w in wedge_decompositions(s):
                if w.nontrivial:
                    parent = is_schurian(s.cc)
                    assert parent == (is_schurian(w.operand0.cc) and is_schurian(w.operand1.cc))
                    checked += 1
    assert checked > 0


def test_sections_of_point_extensions_commute():
    """Section of the extension equals the extension of the section, when partly regular."""
    eqs = 0
    for n in (8, 9, 25):
        for s in scheme_corpus(n):
            assert is_sesquiclosed_cc(s.cc, s.translations())
            ext = point_extension(s.cc, [0])
            for u, l in sections(s):
                ss = section_scheme(s, u, l)
                lhs_base = point_extension(ss.cc, [0])
                rhs_base = section_cc(ext, n, u, l)
                for u0, l0 in sections(ss):
                    lhs = section_cc(lhs_base, ss.n, u0, l0)
                    if is_partly_regular(lhs) is None:
                        continue
                    assert lhs == section_cc(rhs_base, ss.n, u0, l0)
                    eqs += 1
    assert eqs > 0


def test_multiplier_images_stay_in_corpus():
    for n in (8, 9, 16):
        corpus = set(scheme_corpus(n))
        for s in scheme_corpus(n):
            for m in units(n):
                assert multiplier_image(s, m) in corpus
    with pytest.raises(ValueError):
        multiplier_image(thin_scheme(8), 2)


# ---------------------------------------------------------------- isomorphism test


def test_iso_test_multiplier():
    c = ConnectionSet(8, frozenset({1, 2, 7}))
    h = build_circulant(ConnectionSet(8, frozenset({3, 6, 5})))
    cert = iso_test(c, h)
    assert cert.verdict == "isomorphic"
    assert cert.witness == tuple((3 * x) % 8 for x in range(8))
    assert cert.stats["oracle"] == "isomorphic"


def test_iso_test_three_triangles():
    h = disjoint_union(cycle(3), cycle(3), cycle(3))
    cert = iso_test(ConnectionSet(9, frozenset({1, 8})), h)
    assert cert.verdict == "non-isomorphic"
    assert cert.distinguisher is not None
    assert cert.stats["oracle"] == "non-isomorphic"


def test_iso_test_relabeled():
    c = ConnectionSet(4, frozenset({1, 3}))
    h = relabeled_circulant(c, [2, 0, 3, 1])
    cert = iso_test(c, h)
    assert cert.verdict == "isomorphic"


def test_iso_test_rejects_composite_modulus():
    with pytest.raises(ValueError):
        iso_test(ConnectionSet(6, frozenset({1, 5})), cycle(6))


def test_iso_test_undecided_under_caps():
    c = ConnectionSet(9, frozenset({1, 8}))
    assert iso_test(c, cycle(9), cap_tuples=100).verdict == "undecided"


@given(st.sampled_from([8, 9]), st.integers(1, 255), st.integers(0, 2**16))
def test_iso_test_random_relabelings(n, mask, seed):
    c = ConnectionSet(n, frozenset(g for g in range(1, n) if mask >> (g - 1) & 1))
    f = np.random.default_rng(seed).permutation(n).tolist()
    cert = iso_test(c, relabeled_circulant(c, f))
    assert cert.verdict == "isomorphic"


def test_helpers():
    assert divisors(12) == [1, 2, 3, 4, 6, 12]
    assert units(8) == [1, 3, 5, 7]
    assert subgroup(8, 4) == frozenset({0, 2, 4, 6})
    assert prime_power(27) == (3, 3)
    assert isinstance(build_circulant(ConnectionSet(5, frozenset({1}))), Graph)
