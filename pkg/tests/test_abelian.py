import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgtower.abelian import (canonical, format_invariants, invariants_from_orders,
                             invariants_from_relations, is_quotient_of, parse_invariants, smith_form)

from oracles import sympy_invariants


def _mat(rows, V):
    return [[sum(r[k] * V[k][j] for k in range(len(V))) for j in range(len(V))] for r in rows]


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-12, 12), min_size=n, max_size=n), min_size=1, max_size=6)))
def test_smith_form_matches_sympy(rows):
    n = len(rows[0])
    diag, V, Vinv = smith_form(rows, n)
    got = tuple(sorted(abs(d) for d in diag if abs(d) != 1))
    assert got == sympy_invariants(rows, n)
    # V is unimodular with the stated inverse
    ident = _mat(V, Vinv)
    assert ident == [[int(i == j) for j in range(n)] for i in range(n)]


def test_invariants_from_relations():
    assert invariants_from_relations([[2, 0], [0, 4]], 2) == (2, 4)
    assert invariants_from_relations([[4, 2], [2, 4]], 2) == (2, 6)
    with pytest.raises(ValueError):
        invariants_from_relations([[2, 0]], 2)


def test_invariants_from_orders():
    # Z/2 x Z/4: 1 element of order 1, 4 of order dividing 2, 8 dividing 4
    assert invariants_from_orders({0: 1, 1: 4, 2: 8}, 2) == (2, 4)
    assert invariants_from_orders({0: 1, 1: 8}, 2) == (2, 2, 2)


def test_quotient_domination():
    assert is_quotient_of((2, 4), (4, 8))
    assert is_quotient_of((2,), (2, 2))
    assert not is_quotient_of((8,), (4, 4))
    assert not is_quotient_of((2, 2, 2), (4, 4))
    assert is_quotient_of((), (2,))


def test_format_and_parse():
    assert format_invariants((2, 4, 8)) == "[2,4,8]"
    assert parse_invariants("[8,2,4]") == (2, 4, 8)
    assert parse_invariants("[]") == ()
    assert canonical([1, 4, 2, 1]) == (2, 4)
