from collections import Counter

import pytest

from pgtower.autos import automorphism_generators, brute_force_automorphisms, is_automorphism
from pgtower.cover import p_covering_group
from pgtower.descendants import (SizeCapExceeded, TerminalGroup, count_allowable, coupon_estimate,
                                 expected_coupon_draws, immediate_descendants, is_moribund,
                                 is_terminal, random_children)
from pgtower.pcp import consistency_check, dumps
from pgtower.subgroups import abelian_invariants, p_class

from groups import d4, elementary, q8
from oracles import Cayley, abelian_invariants_of, descendant_mismatches, iso_key, isomorphic


def test_q8_is_terminal():
    assert is_terminal(q8())
    assert len(immediate_descendants(q8())) == 0
    assert p_covering_group(q8()).nuclear_rank == 0


def test_elementary_abelian_ranks():
    cd = p_covering_group(elementary(2, 4))
    assert cd.multiplicator_rank == 10 == 4 + 4 * 3 // 2
    assert cd.nuclear_rank == 10
    assert not is_terminal(elementary(2, 4))


def test_koch_group_ranks():
    from pgtower.cover import p_quotient
    from pgtower.fp import builtin
    Q = p_quotient(builtin("koch-q2"), 2, 2)
    cd = p_covering_group(Q)
    assert (Q.ngens, cd.multiplicator_rank, cd.nuclear_rank) == (9, 11, 6)


def test_small_children_counts():
    b = immediate_descendants(elementary(2, 2))
    assert len(b) == 7
    assert Counter(c.step for c in b) == {1: 3, 2: 3, 3: 1}
    assert len(immediate_descendants(elementary(3, 2))) == 7
    assert len(immediate_descendants(elementary(2, 3), max_step=1)) == 4


def test_group_counts_by_order(groups_upto_32):
    counts = Counter(G.ngens for G, _ in groups_upto_32)
    assert [counts[k] for k in range(1, 6)] == [1, 2, 5, 14, 51]


def test_children_are_consistent_descendants(groups_upto_32):
    for G, _ in groups_upto_32[:30]:
        c = p_class(G)
        for ch in immediate_descendants(G, max_step=2):
            P = ch.presentation
            assert consistency_check(P)
            assert p_class(P) == c + 1
            assert dumps(P.truncate(c)) == dumps(G)


def test_terminal_iff_no_children(groups_upto_32):
    for G, d in groups_upto_32:
        if d == 2:
            assert is_terminal(G) == (len(immediate_descendants(G)) == 0)


def test_rank_difference_invariant_under_generator_permutation():
    from pgtower.cover import p_quotient
    from pgtower.fp import FpPresentation
    a = FpPresentation.parse("<a,b,c | a^2, b^4, (a,b)c^-2>")
    b = FpPresentation.parse("<a,b,c | c^2, b^4, (c,b)a^-2>")
    ca, cb = (p_covering_group(p_quotient(x, 2, 2)) for x in (a, b))
    assert ca.multiplicator_rank - ca.nuclear_rank == cb.multiplicator_rank - cb.nuclear_rank


def test_automorphism_generators_match_brute_force():
    for G in (d4(), q8(), elementary(2, 3)):
        gens = automorphism_generators(G)
        assert all(is_automorphism(G, a) for a in gens)
    # order of Aut(D4) is 8, of Aut(Q8) is 24
    from pgtower.autos import _close, identity_automorphism
    for G, size in ((d4(), 8), (q8(), 24)):
        closed = _close(G, {identity_automorphism(G)}, automorphism_generators(G), 1 << 12)
        assert len(closed) == size == len(brute_force_automorphisms(G))


def test_descendants_match_exhaustive_oracle_small():
    """Children of (Z/2)^2 and D4 against the exhaustive allowable-subgroup oracle.

    The acceptance suite runs the same comparison on every two-generator
    parent of order at most 2^5.
    """
    assert descendant_mismatches(elementary(2, 2), 5) == []
    assert descendant_mismatches(d4(), 5) == []


def test_random_children_contract():
    G = elementary(2, 2)
    a = random_children(G, 10, seed=7)
    b = random_children(G, 10, seed=7)
    assert [dumps(x) for x in a] == [dumps(x) for x in b]
    with pytest.raises(TerminalGroup):
        random_children(q8(), 3, seed=1)
    with pytest.raises(ValueError):
        random_children(G, 0, seed=1)


def test_random_children_are_isomorphic_to_enumerated_children():
    G = elementary(2, 2)
    known = [Cayley(c.presentation) for c in immediate_descendants(G)]
    for P in random_children(G, 25, seed=11):
        cay = Cayley(P)
        assert sum(1 for k in known if iso_key(k) == iso_key(cay) and isomorphic(k, cay)) == 1


def test_random_children_uniform_over_allowable_subgroups():
    # (Z/2)^2: nucleus = multiplicator (rank 3): 7 + 7 + 1 allowable subgroups
    G = elementary(2, 2)
    assert count_allowable(G) == 15
    draws = random_children(G, 3000, seed=2)
    orders = Counter(P.ngens for P in draws)
    # steps 1, 2, 3 have 7, 7, 1 allowable subgroups
    assert abs(orders[3] / 3000 - 7 / 15) < 0.04
    assert abs(orders[4] / 3000 - 7 / 15) < 0.04
    assert abs(orders[5] / 3000 - 1 / 15) < 0.02


def test_moribund_examples():
    v = is_moribund(q8(), 0)
    assert v.verdict == "moribund" and v.depth == 0
    assert is_moribund(elementary(2, 4), 1).verdict == "unknown"
    with pytest.raises(SizeCapExceeded):
        is_moribund(elementary(2, 4), 3, max_ngens=20)
    with pytest.raises(ValueError):
        is_moribund(q8(), -1)


def test_coupon_estimates():
    assert round(coupon_estimate(8), 2) == 16.64
    assert abs(expected_coupon_draws(8) - 8 * sum(1 / i for i in range(1, 9))) < 1e-12


def test_abelianization_of_children_matches_oracle():
    for ch in immediate_descendants(elementary(2, 3), max_step=2):
        cay = Cayley(ch.presentation)
        assert abelian_invariants(ch.presentation) == abelian_invariants_of(cay, frozenset(range(cay.order)))
