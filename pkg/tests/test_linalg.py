from fractions import Fraction

import sympy as sp
from hypothesis import given, settings, strategies as st

from hpd.linalg import ColumnEchelon, independent_subset, mat_vec, nullspace, rank, solve

entries = st.fractions(min_value=-3, max_value=3, max_denominator=3)
columns = st.lists(st.dictionaries(st.integers(0, 4), entries, max_size=4).map(
    lambda d: {k: v for k, v in d.items() if v}), min_size=1, max_size=6)


def to_matrix(cols, rows=5):
    return sp.Matrix(rows, len(cols), lambda r, c: sp.Rational(cols[c].get(r, Fraction(0)).numerator,
                                                                cols[c].get(r, Fraction(0)).denominator))


@settings(max_examples=200, deadline=None)
@given(columns)
def test_rank_matches_sympy(cols):
    assert rank(cols) == to_matrix(cols).rank()


@settings(max_examples=200, deadline=None)
@given(columns, st.dictionaries(st.integers(0, 5), entries, max_size=6))
def test_solve_reproduces_target(cols, combo):
    combo = {k: v for k, v in combo.items() if k < len(cols) and v}
    target = mat_vec(cols, combo)
    x = solve(cols, target)
    assert x is not None
    assert mat_vec(cols, x) == target


@settings(max_examples=200, deadline=None)
@given(columns)
def test_nullspace(cols):
    basis = nullspace(cols)
    assert len(basis) == len(cols) - rank(cols)
    for v in basis:
        assert mat_vec(cols, v) == {}


def test_solve_none_when_outside_span():
    cols = [{0: Fraction(1)}, {0: Fraction(2)}]
    assert solve(cols, {1: Fraction(1)}) is None


def test_pivoting_rule_prefers_earliest_columns():
    cols = [{0: Fraction(1)}, {0: Fraction(1)}, {1: Fraction(1)}]
    x = solve(cols, {0: Fraction(3), 1: Fraction(2)})
    assert x == {0: Fraction(3), 2: Fraction(2)}
    assert independent_subset(cols) == [0, 2]


def test_echelon_incremental():
    ech = ColumnEchelon()
    assert ech.add({0: Fraction(1), 1: Fraction(1)})
    assert not ech.add({0: Fraction(2), 1: Fraction(2)})
    assert ech.add({1: Fraction(1)})
    assert ech.rank == 2
