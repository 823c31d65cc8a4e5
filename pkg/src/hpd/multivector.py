"""Polyvector fields on a single chart and their calculus.

A degree-q multivector is stored as ``{J: coefficient}`` where ``J`` is a
strictly increasing tuple of variable indices, meaning ``sum_J c_J d_J``
with ``d_J`` the wedge of the coordinate vector fields in ``J``.  The stored
coefficient is the genuine component, e.g. ``c_(0,1) = g_01 = -g_10``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .errors import ChartMismatch, DegreeMismatch, DegreeZero, MissingInverse, NotLaurent
from .exactalg import (LPoly, ONE, RatFn, ZERO, differentiate, ratfn_to_jet,
                       substitute)

# [s, s] has d_123 coefficient NORMALIZATION * jacobi_defect(s)[(0, 1, 2)]
NORMALIZATION = Fraction(-2)


def merge_sign(a: Sequence[int], b: Sequence[int]):
    """Sorted union of disjoint index tuples and the sign of the shuffle, or None."""
    if not a:
        return tuple(b), 1
    if not b:
        return tuple(a), 1
    sa = set(a)
    if sa.intersection(b):
        return None
    # count inversions between a and b: pairs (i in a, j in b) with i > j
    inv = 0
    for i in a:
        for j in b:
            if i > j:
                inv += 1
    return tuple(sorted(tuple(a) + tuple(b))), (-1 if inv & 1 else 1)


def sort_sign(idx: Sequence[int]):
    """Sort an index sequence, returning (sorted, sign) or None on repeats."""
    if len(set(idx)) != len(idx):
        return None
    inv = 0
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                inv += 1
    return tuple(sorted(idx)), (-1 if inv & 1 else 1)


class Multivector:
    """Degree-q polyvector field on the chart with coordinates ``variables``."""

    __slots__ = ("chart", "variables", "degree", "comps")

    def __init__(self, variables: Sequence[str], degree: int, comps: Mapping[tuple, LPoly] | None = None,
                 chart: str | None = None):
        self.variables = tuple(variables)
        self.chart = chart
        self.degree = int(degree)
        n = len(self.variables)
        clean = {}
        for J, c in (comps or {}).items():
            J = tuple(J)
            if len(J) != self.degree or any(J[i] >= J[i + 1] for i in range(len(J) - 1)):
                raise DegreeMismatch(f"index tuple {J} is not strictly increasing of length {self.degree}")
            if J and (J[0] < 0 or J[-1] >= n):
                raise DegreeMismatch(f"index tuple {J} out of range for dimension {n}")
            if not isinstance(c, LPoly):
                c = LPoly.const(c) if isinstance(c, (int, Fraction)) else RatFn.of(c).to_lpoly()
            if c:
                clean[J] = c
        self.comps: dict = clean

    # construction helpers
    @staticmethod
    def zero(variables: Sequence[str], degree: int, chart: str | None = None) -> "Multivector":
        return Multivector(variables, degree, {}, chart)

    @staticmethod
    def basis(variables: Sequence[str], names: Sequence[str], coeff=ONE, chart: str | None = None) -> "Multivector":
        """``coeff * d_{names[0]} ^ d_{names[1]} ^ ...`` in the given order."""
        variables = tuple(variables)
        idx = [variables.index(v) for v in names]
        s = sort_sign(idx)
        if s is None:
            return Multivector(variables, len(names), {}, chart)
        J, sign = s
        return Multivector(variables, len(J), {J: coeff * sign}, chart)

    @staticmethod
    def function(variables: Sequence[str], f: LPoly, chart: str | None = None) -> "Multivector":
        return Multivector(variables, 0, {(): f}, chart)

    @property
    def dim(self) -> int:
        return len(self.variables)

    def is_zero(self) -> bool:
        return not self.comps

    def like(self, comps: Mapping[tuple, LPoly], degree: int | None = None) -> "Multivector":
        return Multivector(self.variables, self.degree if degree is None else degree, comps, self.chart)

    def _check(self, other: "Multivector"):
        if self.variables != other.variables or (self.chart and other.chart and self.chart != other.chart):
            raise ChartMismatch(f"charts {self.chart}{self.variables} and {other.chart}{other.variables} differ")

    def __add__(self, other: "Multivector") -> "Multivector":
        self._check(other)
        if self.degree != other.degree:
            if other.is_zero():
                return self
            if self.is_zero():
                return other
            raise DegreeMismatch("cannot add multivectors of different degrees")
        out = dict(self.comps)
        for J, c in other.comps.items():
            out[J] = out[J] + c if J in out else c
        return self.like(out)

    def __neg__(self) -> "Multivector":
        return self.like({J: -c for J, c in self.comps.items()})

    def __sub__(self, other: "Multivector") -> "Multivector":
        return self + (-other)

    def scale(self, f) -> "Multivector":
        if isinstance(f, (int, Fraction)) and not f:
            return self.like({})
        return self.like({J: c * f for J, c in self.comps.items()})

    __mul__ = scale
    __rmul__ = scale

    def __eq__(self, other) -> bool:
        if not isinstance(other, Multivector):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return self.variables == other.variables
        return self.variables == other.variables and self.degree == other.degree and self.comps == other.comps

    def __hash__(self):
        return hash((self.variables, self.degree, frozenset(self.comps.items())))

    def map_coeffs(self, fn) -> "Multivector":
        return self.like({J: fn(c) for J, c in self.comps.items()})

    def truncate(self, params: Iterable[str], order: int) -> "Multivector":
        ps = tuple(params)
        return self.map_coeffs(lambda c: c.truncate(ps, order))

    def homogeneous_part(self, params: Iterable[str], degree: int) -> "Multivector":
        ps = tuple(params)
        return self.map_coeffs(lambda c: c.homogeneous_part(ps, degree))

    def set_zero(self, names: Iterable[str]) -> "Multivector":
        ns = tuple(names)
        return self.map_coeffs(lambda c: c.set_zero(ns))

    def diff_param(self, name: str) -> "Multivector":
        return self.map_coeffs(lambda c: differentiate(c, name))

    def relabel(self, variables: Sequence[str], chart: str | None = None) -> "Multivector":
        """Same components viewed on a chart with the same dimension."""
        if len(variables) != self.dim:
            raise ChartMismatch("relabel needs equal dimensions")
        return Multivector(variables, self.degree, self.comps, chart)

    def component(self, *names: str) -> LPoly:
        idx = [self.variables.index(v) for v in names]
        s = sort_sign(idx)
        if s is None:
            return ZERO
        J, sign = s
        c = self.comps.get(J, ZERO)
        return c if sign > 0 else -c

    def __repr__(self) -> str:
        from .parse import format_multivector
        return f"Multivector({format_multivector(self)!r}, chart={self.chart!r})"

    def __str__(self) -> str:
        from .parse import format_multivector
        return format_multivector(self)


def wedge(a: Multivector, b: Multivector) -> Multivector:
    a._check(b)
    deg = a.degree + b.degree
    out: dict = {}
    if deg <= a.dim:
        for J, ca in a.comps.items():
            for L, cb in b.comps.items():
                m = merge_sign(J, L)
                if m is None:
                    continue
                K, sign = m
                val = ca * cb if sign > 0 else -(ca * cb)
                out[K] = out[K] + val if K in out else val
    return Multivector(a.variables, deg, out, a.chart or b.chart)


def _right_derivative(J: tuple, i: int):
    """d/dxi_i acting from the right on xi_J: (remaining tuple, sign) or None."""
    if i not in J:
        return None
    pos = J.index(i)
    sign = -1 if (len(J) - 1 - pos) & 1 else 1
    return J[:pos] + J[pos + 1:], sign


def _bracket_terms(a: Multivector, b: Multivector, out: dict, scale: int):
    """Accumulate scale * sum_i (d_r a / d xi_i) ^ (d b / d z_i) into ``out``."""
    variables = a.variables
    for J, ca in a.comps.items():
        for i in J:
            rest, s1 = _right_derivative(J, i)
            var = variables[i]
            for L, cb in b.comps.items():
                db = differentiate(cb, var)
                if not db:
                    continue
                m = merge_sign(rest, L)
                if m is None:
                    continue
                K, s2 = m
                val = ca * db
                if s1 * s2 * scale < 0:
                    val = -val
                out[K] = out[K] + val if K in out else val


def schouten(a: Multivector, b: Multivector) -> Multivector:
    """Schouten-Nijenhuis bracket; on vector fields it is the Lie bracket."""
    a._check(b)
    if a.degree == 0 or b.degree == 0:
        raise DegreeZero("schouten needs arguments of degree >= 1")
    return bracket_any(a, b)


def bracket_any(a: Multivector, b: Multivector) -> Multivector:
    """Schouten bracket also accepting functions: [X, f] = X(f)."""
    a._check(b)
    p, q = a.degree, b.degree
    deg = p + q - 1
    if deg < 0:
        return Multivector(a.variables, 0, {}, a.chart)
    out: dict = {}
    if deg <= a.dim:
        _bracket_terms(a, b, out, 1)
        sign = -1 if ((p - 1) * (q - 1)) & 1 == 0 else 1
        _bracket_terms(b, a, out, sign)
    return Multivector(a.variables, deg, out, a.chart or b.chart)


def _full_component(s: Multivector, i: int, j: int) -> LPoly:
    if i == j:
        return ZERO
    if i < j:
        return s.comps.get((i, j), ZERO)
    return -s.comps.get((j, i), ZERO)


def jacobi_defect(s: Multivector) -> dict:
    """Cyclic sum  sum_l (s_lk d_l s_ij + s_li d_l s_jk + s_lj d_l s_ki)  for i<j<k."""
    if s.degree != 2:
        raise DegreeMismatch("jacobi_defect needs a bivector")
    n = s.dim
    out = {}
    for i, j, k in combinations(range(n), 3):
        total = ZERO
        for l in range(n):
            v = s.variables[l]
            total = total + _full_component(s, l, k) * differentiate(_full_component(s, i, j), v)
            total = total + _full_component(s, l, i) * differentiate(_full_component(s, j, k), v)
            total = total + _full_component(s, l, j) * differentiate(_full_component(s, k, i), v)
        out[(i, j, k)] = total
    return out


# -- chart maps -------------------------------------------------------------

@dataclass
class ChartMap:
    """Coordinate change: target variables as RatFns of source variables.

    ``inverse`` holds the source variables as RatFns of the target ones.
    Parameters may occur freely in both.
    """
    source: str
    target: str
    source_vars: tuple
    target_vars: tuple
    components: tuple
    inverse: tuple | None = None
    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.source_vars = tuple(self.source_vars)
        self.target_vars = tuple(self.target_vars)
        self.components = tuple(RatFn.of(c) for c in self.components)
        if self.inverse is not None:
            self.inverse = tuple(RatFn.of(c) for c in self.inverse)
            if len(self.inverse) != len(self.source_vars):
                raise ChartMismatch("inverse component count differs from source dimension")
        if len(self.components) != len(self.target_vars):
            raise ChartMismatch("component count differs from target dimension")
        self.params = tuple(self.params)

    def forward_assignment(self) -> dict:
        return dict(zip(self.target_vars, self.components))

    def inverse_assignment(self) -> dict:
        if self.inverse is None:
            raise MissingInverse(f"map {self.source}->{self.target} has no declared inverse")
        return dict(zip(self.source_vars, self.inverse))

    def inverted(self) -> "ChartMap":
        if self.inverse is None:
            raise MissingInverse(f"map {self.source}->{self.target} has no declared inverse")
        return ChartMap(self.target, self.source, self.target_vars, self.source_vars,
                        self.inverse, self.components, self.params)

    def apply(self, f) -> RatFn:
        """Pull a function of the target variables back to the source."""
        return substitute(f, self.forward_assignment(), passthrough=self.params)

    def to_target(self, f) -> RatFn:
        """Express a function of the source variables in target variables."""
        return substitute(f, self.inverse_assignment(), passthrough=self.params)

    def compose(self, first: "ChartMap") -> "ChartMap":
        """``self o first``: apply ``first`` then ``self``."""
        if first.target_vars != self.source_vars:
            raise ChartMismatch("composition of incompatible chart maps")
        comps = tuple(first.apply(c) for c in self.components)
        inv = None
        if self.inverse is not None and first.inverse is not None:
            inv = tuple(self.to_target(c) for c in first.inverse)
        return ChartMap(first.source, self.target, first.source_vars, self.target_vars, comps, inv,
                        tuple(dict.fromkeys(first.params + self.params)))

    def jacobian(self) -> list:
        """``J[a][r] = d target_a / d source_r`` as RatFns."""
        return [[c.diff(v) for v in self.source_vars] for c in self.components]

    def set_params(self, values: Mapping[str, object]) -> "ChartMap":
        vals = {k: RatFn.of(v) for k, v in values.items()}
        keep_s = tuple(self.source_vars) + tuple(p for p in self.params if p not in vals)
        keep_t = tuple(self.target_vars) + tuple(p for p in self.params if p not in vals)
        comps = tuple(substitute(c, vals, passthrough=keep_s) for c in self.components)
        inv = None
        if self.inverse is not None:
            inv = tuple(substitute(c, vals, passthrough=keep_t) for c in self.inverse)
        return ChartMap(self.source, self.target, self.source_vars, self.target_vars, comps, inv,
                        tuple(p for p in self.params if p not in vals))


def identity_map(chart: str, variables: Sequence[str]) -> ChartMap:
    comps = tuple(RatFn(LPoly.var(v)) for v in variables)
    return ChartMap(chart, chart, tuple(variables), tuple(variables), comps, comps)


def _det(rows: list) -> RatFn:
    n = len(rows)
    if n == 0:
        return RatFn(ONE)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = RatFn(ZERO)
    for c in range(n):
        if rows[0][c].is_zero():
            continue
        minor = [r[:c] + r[c + 1:] for r in rows[1:]]
        term = rows[0][c] * _det(minor)
        total = total + term if c % 2 == 0 else total - term
    return total


def transform_components(m: Multivector, jac: list) -> dict:
    """Apply the q-fold Jacobian law; result keyed by target index tuples (RatFn values)."""
    n_t = len(jac)
    out: dict = {}
    for A in combinations(range(n_t), m.degree):
        total = None
        for R, c in m.comps.items():
            d = _det([[jac[a][r] for r in R] for a in A])
            if d.is_zero():
                continue
            val = d * c
            total = val if total is None else total + val
        if total is not None and not total.is_zero():
            out[A] = total
    return out


def pushforward(m: Multivector, f: ChartMap, params: Iterable[str] | None = None,
                order: int | None = None) -> Multivector:
    """Transport ``m`` from ``f.source`` to ``f.target``.

    Components must come out as Laurent polynomials in the target
    variables; when ``order`` is given, genuine fractions are instead
    expanded as jets in ``params`` up to that order.
    """
    if m.variables != f.source_vars:
        raise ChartMismatch(f"multivector lives on {m.variables}, map starts at {f.source_vars}")
    inv = f.inverse_assignment()
    comps = transform_components(m, f.jacobian())
    out = {}
    for A, val in comps.items():
        r = substitute(val, inv, passthrough=f.params + tuple(params or ()))
        q = r.try_lpoly()
        if q is None:
            if order is None:
                raise NotLaurent(f"pushforward component {A} is not Laurent")
            q = ratfn_to_jet(r, tuple(params), order)
        elif order is not None:
            q = q.truncate(tuple(params), order)
        out[A] = q
    return Multivector(f.target_vars, m.degree, out, f.target)


def poisson_map_residual(f: ChartMap, src: Multivector, tgt: Multivector) -> dict:
    """``R_ab = tgt_ab(f(z)) - sum_{r<s} src_rs (J_ar J_bs - J_as J_br)`` as RatFns in source variables."""
    if src.degree != 2 or tgt.degree != 2:
        raise DegreeMismatch("poisson_map_residual needs bivectors")
    if src.variables != f.source_vars or tgt.variables != f.target_vars:
        raise ChartMismatch("bivectors do not sit on the map's charts")
    pushed = transform_components(src, f.jacobian())
    out = {}
    for A in combinations(range(len(f.target_vars)), 2):
        lhs = f.apply(tgt.comps.get(A, ZERO))
        rhs = pushed.get(A, RatFn(ZERO))
        out[A] = lhs - rhs
    return out
