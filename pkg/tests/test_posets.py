import numpy as np
import pytest

from interdecomp.posets import (
    LowerSet,
    Poset,
    PosetError,
    antichain,
    chain,
    poset_from_json,
    poset_to_json,
    power_set,
)

from builders import random_poset


# -- brute-force oracles ---------------------------------------------------


def brute_lower_set(p: Poset, a):
    return {b for b in p.elements if p.le(b, a)}


def brute_meet(p: Poset, a, b):
    """Greatest common lower bound by enumeration, or None."""
    low = [c for c in p.elements if p.le(c, a) and p.le(c, b)]
    for d in low:
        if all(p.le(c, d) for c in low):
            return d
    return None


def brute_lower_sets(p: Poset):
    """All downward-closed subsets by filtering the full power set."""
    elems = list(p.elements)
    out = set()
    for mask in range(1 << len(elems)):
        s = frozenset(elems[i] for i in range(len(elems)) if mask >> i & 1)
        if all(c in s for b in s for c in p.elements if p.le(c, b)):
            out.add(s)
    return out


# -- construction ----------------------------------------------------------


def test_closure_from_covers():
    p = chain(3)
    assert p.le(0, 2)  # transitively closed
    assert p.le(1, 1)  # reflexive
    assert not p.le(2, 0)


def test_cycle_rejected():
    with pytest.raises(PosetError, match="cycle"):
        Poset("abc", [("a", "b"), ("b", "c"), ("c", "a")])


def test_duplicate_ids_rejected():
    with pytest.raises(PosetError):
        Poset(["x", "x"], [])


def test_cover_pairs_recovered():
    p = Poset("abcd", [("a", "b"), ("b", "d"), ("a", "c"), ("c", "d"), ("a", "d")])
    # (a, d) is implied, not covering
    assert p.cover_pairs() == [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]


# -- lower sets ------------------------------------------------------------


def test_lower_set_chain():
    p = chain(3)
    assert p.lower_set(1).members == {0, 1}


def test_lower_set_antichain():
    p = antichain("xy")
    assert p.lower_set("x").members == {"x"}


def test_lower_set_power_set_top():
    p = power_set(["1", "2"])
    assert len(p.lower_set(p.id_of(["1", "2"]))) == 4


def test_lower_set_unknown_element():
    with pytest.raises(PosetError):
        chain(2).lower_set(7)


def test_lower_set_validates_closure():
    p = chain(3)
    with pytest.raises(PosetError, match="not a lower set"):
        LowerSet(p, {1})  # 0 missing


def test_lower_set_is_smallest_containing():
    rng = np.random.default_rng(11)
    for _ in range(20):
        p = random_poset(rng, int(rng.integers(1, 8)))
        for a in p.elements:
            ls = p.lower_set(a)
            assert ls.members == brute_lower_set(p, a)
            # smallest: dropping any non-a member breaks closure or misses a
            for m in ls.members - {a}:
                with pytest.raises(PosetError):
                    LowerSet(p, ls.members - {m})


# -- Mobius function -------------------------------------------------------


def test_mobius_diagonal_is_one():
    rng = np.random.default_rng(5)
    p = random_poset(rng, 6)
    for a in p.elements:
        assert p.mobius[(a, a)] == 1


def test_mobius_chain_value():
    # 3-chain by hand: mu(2,2)=1, mu(2,1)=-1, interval sum forces mu(2,0)=0
    p = chain(3)
    assert p.mobius[(2, 1)] == -1
    assert p.mobius[(2, 0)] == 0


def test_mobius_power_set_signs():
    p = power_set(["1", "2"])
    top = p.id_of(["1", "2"])
    assert p.mobius[(top, p.id_of([]))] == 1
    assert p.mobius[(top, p.id_of(["1"]))] == -1
    # full sign pattern (-1)^{|a minus b|}
    for a in p.elements:
        for b in p.elements:
            if p.le(b, a):
                k = len(p.member_sets[a] - p.member_sets[b])
                assert p.mobius[(a, b)] == (-1) ** k


def test_mobius_inversion_round_trip():
    # g(a) = sum_{b<=a} f(b)  recovers  f(a) = sum_{b<=a} mu(a,b) g(b), exactly
    rng = np.random.default_rng(23)
    for _ in range(30):
        p = random_poset(rng, int(rng.integers(1, 11)))
        f = {a: int(rng.integers(-50, 50)) for a in p.elements}
        g = {a: sum(f[b] for b in p.elements if p.le(b, a)) for a in p.elements}
        for a in p.elements:
            back = sum(p.mobius[(a, b)] * g[b] for b in p.elements if p.le(b, a))
            assert back == f[a]


# -- meet structure --------------------------------------------------------


def test_meet_power_set_is_intersection():
    for n in range(1, 5):
        p = power_set([str(i) for i in range(n)])
        assert p.is_meet_semilattice()
        for a in p.elements:
            for b in p.elements:
                expect = p.id_of(p.member_sets[a] & p.member_sets[b])
                assert p.meet(a, b) == expect


def test_meet_chain_is_min():
    p = chain(4)
    assert p.is_meet_semilattice()
    assert p.meet(1, 3) == 1
    assert p.meet(2, 2) == 2


def test_v_poset_is_not_meet_semilattice():
    # 0 <= 1, 0' <= 2: the pair (1, 2) has no common lower bound at all
    p = Poset(["0", "0'", "1", "2"], [("0", "1"), ("0'", "2")])
    assert not p.is_meet_semilattice()
    with pytest.raises(PosetError):
        p.meet("1", "2")


def test_meet_matches_brute_force():
    rng = np.random.default_rng(41)
    for _ in range(25):
        p = random_poset(rng, int(rng.integers(1, 7)))
        brute_all = {
            (a, b): brute_meet(p, a, b) for a in p.elements for b in p.elements
        }
        if all(v is not None for v in brute_all.values()):
            assert p.is_meet_semilattice()
            for (a, b), d in brute_all.items():
                assert p.meet(a, b) == d
        else:
            assert not p.is_meet_semilattice()


def test_meet_lower_set_identity():
    # principal lower sets intersect to the meet's lower set
    rng = np.random.default_rng(47)
    hits = 0
    while hits < 5:
        p = random_poset(rng, 5)
        if not p.is_meet_semilattice():
            continue
        hits += 1
        for a in p.elements:
            for b in p.elements:
                cap = p.lower_set(a).members & p.lower_set(b).members
                assert cap == p.lower_set(p.meet(a, b)).members


# -- linear extension ------------------------------------------------------


def test_linear_extension_chain():
    assert chain(3).linear_extension() == [0, 1, 2]


def test_linear_extension_antichain_tie_break():
    assert antichain("yx").linear_extension() == ["x", "y"]


def test_linear_extension_sorted_consistency():
    rng = np.random.default_rng(7)
    for _ in range(30):
        p = random_poset(rng, int(rng.integers(1, 9)))
        seq = p.linear_extension()
        assert sorted(seq, key=str) != [] and len(seq) == len(p)
        for i in range(len(seq)):
            for j in range(i + 1, len(seq)):
                assert not (p.le(seq[j], seq[i]) and seq[i] != seq[j])


def test_linear_extension_power_set_is_graded():
    p = power_set(["1", "2"])
    seq = p.linear_extension()
    sizes = [len(p.member_sets[a]) for a in seq]
    assert sizes == sorted(sizes)


# -- extensions ------------------------------------------------------------


def test_extend_plus_antichain():
    p = antichain(["x"])
    plus = p.extend_plus()
    assert set(plus.elements) == {"x", "1"}
    assert plus.le("x", plus.top)


def test_extend_plus_fresh_top_id():
    p = Poset(["1", "a"], [("a", "1")])
    plus = p.extend_plus()
    assert plus.top not in p.elements
    assert all(plus.le(e, plus.top) for e in p.elements)


def test_extend_plus_restricts_to_base():
    rng = np.random.default_rng(3)
    p = random_poset(rng, 6)
    plus = p.extend_plus()
    for a in p.elements:
        for b in p.elements:
            assert plus.le(a, b) == p.le(a, b)


def test_a1_chain_members():
    p = chain(2)
    a1 = p.extend_a1()
    assert set(a1.elements) == {(0, 0), (1, 0), (1, 1)}


def test_a1_size_formula():
    rng = np.random.default_rng(19)
    for _ in range(10):
        p = random_poset(rng, int(rng.integers(1, 8)))
        a1 = p.extend_a1()
        assert len(a1) == sum(len(p.lower_set(a)) for a in p.elements)
        # componentwise order
        for (alpha, a) in a1.elements:
            for (beta, b) in a1.elements:
                assert a1.le((beta, b), (alpha, a)) == (
                    p.le(beta, alpha) and p.le(b, a)
                )


def test_a2_chain_pairs():
    p = chain(2)
    pairs = [(alpha, B.members) for alpha, B in p.extend_a2().pairs()]
    assert pairs == [
        (0, frozenset()),
        (0, frozenset({0})),
        (1, frozenset()),
        (1, frozenset({0})),
        (1, frozenset({0, 1})),
    ]


def test_a2_cap_guard():
    p = antichain(range(13))  # 2^13 lower sets
    with pytest.raises(PosetError, match="cap"):
        list(p.iter_lower_sets(max_count=4096))
    with pytest.raises(PosetError, match="cap"):
        list(p.extend_a2(max_lower_sets=100).pairs())


def test_a2_le_and_membership():
    p = chain(3)
    a2 = p.extend_a2()
    b_small = LowerSet(p, {0})
    b_big = LowerSet(p, {0, 1})
    assert a2.has_pair(1, b_small)
    assert not a2.has_pair(0, b_big)
    assert a2.le((1, b_small), (2, b_big))
    assert not a2.le((2, b_small), (1, b_small))


def test_a2_materialize_small():
    p = chain(2)
    concrete = p.extend_a2().materialize()
    assert len(concrete) == 5
    lo = (0, frozenset())
    hi = (1, frozenset({0, 1}))
    assert concrete.le(lo, hi)


def test_lower_set_enumeration_matches_brute_force():
    rng = np.random.default_rng(29)
    for _ in range(15):
        p = random_poset(rng, int(rng.integers(1, 7)))
        got = {ls.members for ls in p.iter_lower_sets()}
        assert got == brute_lower_sets(p)


# -- serialization ---------------------------------------------------------


def test_json_round_trip():
    rng = np.random.default_rng(59)
    p = random_poset(rng, 6)
    q = poset_from_json(poset_to_json(p))
    assert q.elements == p.elements
    assert np.array_equal(q.leq, p.leq)


def test_json_power_set_form():
    p = poset_from_json({"power_set_of": ["u", "v"]})
    assert len(p) == 4
    assert p.le("{u}", "{u,v}")


def test_json_bad_inputs():
    for bad in (
        [],
        {"elements": "abc"},
        {"covers": []},
        {"elements": ["a"], "covers": [["a"]]},
        {"power_set_of": [1, 2]},
    ):
        with pytest.raises(PosetError):
            poset_from_json(bad)
