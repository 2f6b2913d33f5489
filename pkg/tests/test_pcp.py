import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgtower.cover import p_quotient
from pgtower.fp import FpPresentation, builtin
from pgtower.pcp import PresentationError, collect, consistency_check, dumps, loads
from pgtower.subgroups import abelian_invariants, p_central_series, p_class

from groups import cyclic, d4, d4_without_commutator, elementary, q8
from oracles import closure_table, rewrite


def test_empty_word_is_identity():
    assert collect(d4(), []) == (0, 0, 0)


def test_square_of_second_generator_in_d4():
    assert collect(d4(), [2, 2]) == (0, 0, 1)


def test_commutator_in_d4():
    G = d4()
    assert G.comm(G.gen(1), G.gen(0)) == (0, 0, 1)


def test_inverse_and_self_commutator():
    G = d4()
    assert G.inv(G.identity) == G.identity
    for g in [(1, 0, 0), (1, 1, 1), (0, 1, 0)]:
        assert G.comm(g, g) == G.identity
        assert G.mul(g, G.inv(g)) == G.identity


def test_generator_index_out_of_range():
    with pytest.raises((IndexError, ValueError)):
        collect(d4(), [4])


def test_consistency_examples():
    assert consistency_check(d4())
    assert consistency_check(q8())
    assert not consistency_check(d4_without_commutator())


def test_inconsistent_power_relation_is_detected():
    # b = a^2 must commute with a, so [b, a] = c != 1 breaks associativity
    from pgtower.pcp import PcPresentation
    bad = PcPresentation.from_relations(2, 3, weights=(1, 2, 3),
                                        definitions=(None, ("pow", 0), ("comm", 1, 0)),
                                        powers={0: {1: 1}}, commutators={(1, 0): {2: 1}})
    assert not consistency_check(bad)


def test_abelian_invariants_examples():
    assert abelian_invariants(q8()) == (2, 2)
    assert abelian_invariants(d4()) == (2, 2)
    assert abelian_invariants(cyclic(2, 3)) == (8,)
    assert abelian_invariants(p_quotient(builtin("koch-q2"), 2, 2)) == (2, 2, 2, 2)


def test_p_class_examples():
    assert p_class(elementary(2, 4)) == 1
    assert p_class(d4()) == 2
    assert p_class(cyclic(2, 3)) == 3
    assert p_class(p_quotient(builtin("conj72-1"), 2, 3)) == 3
    series = p_central_series(d4())
    assert [len(H.cgs) for H in series] == [3, 1, 0]


def test_dumps_loads_roundtrip(groups_upto_32):
    for G, _ in groups_upto_32:
        text = dumps(G)
        assert dumps(loads(text)) == text


def test_loads_rejects_garbage():
    with pytest.raises(PresentationError):
        loads("not a presentation")


def test_collect_agrees_with_rewriting_tables(groups_upto_32):
    for G, _ in groups_upto_32:
        table = closure_table(G)
        for (x, y), z in table.items():
            assert G.mul(x, y) == z


def test_every_generated_presentation_is_consistent(groups_upto_64):
    assert all(consistency_check(G) for G, _ in groups_upto_64)


def test_p_quotients_are_consistent_and_tower_compatible():
    fp = builtin("koch-q2")
    Q1, Q2, Q3 = (p_quotient(fp, 2, c) for c in (1, 2, 3))
    for Q in (Q1, Q2, Q3):
        assert consistency_check(Q)
    assert dumps(Q3.truncate(2)) == dumps(Q2)
    assert dumps(Q2.truncate(1)) == dumps(Q1)


def test_free_presentation_quotient():
    Q = p_quotient(FpPresentation.parse("<a,b | >"), 3, 1)
    assert Q.ngens == 2 and Q.prime == 3


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_group_axioms_on_random_elements(data, groups_upto_32):
    G, _ = data.draw(st.sampled_from(groups_upto_32))
    vec = st.tuples(*[st.integers(0, G.prime - 1)] * G.ngens)
    x, y, z = data.draw(vec), data.draw(vec), data.draw(vec)
    assert G.mul(G.mul(x, y), z) == G.mul(x, G.mul(y, z))
    assert G.mul(x, G.inv(x)) == G.identity
    assert G.comm(x, y) == G.mul(G.mul(G.inv(x), G.inv(y)), G.mul(x, y))
    assert G.pow(x, G.element_order(x)) == G.identity


def test_rewriting_oracle_on_signed_words():
    rng = random.Random(3)
    G = q8()
    for _ in range(50):
        word = [rng.choice([1, 2, 3, -1, -2, -3]) for _ in range(rng.randrange(8))]
        # the oracle only takes positive words: replace a^-1 by a^(order-1)
        pos = []
        for s in word:
            k = abs(s) - 1
            reps = 1 if s > 0 else G.element_order(G.gen(k)) - 1
            pos += [k] * reps
        assert collect(G, word) == rewrite(G, pos)
