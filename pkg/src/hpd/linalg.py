"""Exact sparse linear algebra over the rationals.

Vectors are dicts ``{index: Fraction}`` without zero entries; a matrix is a
list of column vectors.  Elimination always picks the lowest available row
index as pivot, which makes every result a deterministic function of the input.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

SparseVec = dict


def vec_add(a: SparseVec, b: SparseVec, scale: Fraction = Fraction(1)) -> SparseVec:
    out = dict(a)
    for i, v in b.items():
        s = out.get(i, 0) + scale * v
        if s:
            out[i] = s
        else:
            out.pop(i, None)
    return out


class ColumnEchelon:
    """Incrementally reduced column space.

    Each stored column has a distinct pivot row (its smallest row index
    after reduction), and records how it was formed from the inserted
    columns so that membership tests return explicit coefficients.
    """

    def __init__(self):
        self.pivots: dict[int, tuple[SparseVec, SparseVec]] = {}  # row -> (column, combination)
        self.count = 0

    def reduce(self, col: SparseVec) -> tuple[SparseVec, SparseVec]:
        """Reduce ``col`` against stored pivots; return (remainder, combination used)."""
        col = dict(col)
        combo: SparseVec = {}
        last = None
        while True:
            # eliminating at a pivot row only touches larger rows
            cands = [r for r in col if r in self.pivots and (last is None or r > last)]
            if not cands:
                return col, combo
            row = min(cands)
            pcol, pcombo = self.pivots[row]
            factor = col[row] / pcol[row]
            col = vec_add(col, pcol, -factor)
            combo = vec_add(combo, pcombo, factor)
            last = row

    def add(self, col: SparseVec, label: int | None = None) -> bool:
        """Insert a column; return True if it enlarged the span."""
        idx = self.count if label is None else label
        self.count += 1
        rem, combo = self.reduce(col)
        if not rem:
            return False
        combo = vec_add({idx: Fraction(1)}, combo, Fraction(-1))
        self.pivots[min(rem)] = (rem, combo)
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)


def rank(columns: Sequence[SparseVec]) -> int:
    ech = ColumnEchelon()
    for c in columns:
        ech.add(c)
    return ech.rank


def solve(columns: Sequence[SparseVec], target: SparseVec) -> SparseVec | None:
    """Find x with ``sum_i x_i columns[i] = target``, or None.

    Columns are processed left to right; a column that is dependent on
    earlier ones gets coefficient 0.  So the solution uses the
    lexicographically earliest independent columns and sets free
    variables to zero.
    """
    ech = ColumnEchelon()
    for i, c in enumerate(columns):
        ech.add(c, label=i)
    rem, combo = ech.reduce(target)
    if rem:
        return None
    return combo


def nullspace(columns: Sequence[SparseVec]) -> list[SparseVec]:
    """Basis of {x : sum x_i columns[i] = 0}, one vector per dependent column."""
    ech = ColumnEchelon()
    basis = []
    for i, c in enumerate(columns):
        rem, combo = ech.reduce(c)
        if rem:
            ech.pivots[min(rem)] = (rem, vec_add({i: Fraction(1)}, combo, Fraction(-1)))
        else:
            # c = sum combo_j col_j, so e_i - combo is a kernel vector
            basis.append(vec_add({i: Fraction(1)}, combo, Fraction(-1)))
        ech.count += 1
    return basis


def independent_subset(columns: Iterable[SparseVec], start: Iterable[SparseVec] = ()) -> list[int]:
    """Indices of columns that extend the span of ``start`` greedily in order."""
    ech = ColumnEchelon()
    for c in start:
        ech.add(c, label=-1)
    chosen = []
    for i, c in enumerate(columns):
        if ech.add(c, label=i):
            chosen.append(i)
    return chosen


def mat_vec(columns: Sequence[SparseVec], x: SparseVec) -> SparseVec:
    out: SparseVec = {}
    for j, v in x.items():
        out = vec_add(out, columns[j], v)
    return out
