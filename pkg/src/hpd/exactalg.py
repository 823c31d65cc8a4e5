"""Exact arithmetic: rationals, Laurent polynomials, formal quotients, parameter jets.

A monomial is a sorted tuple of ``(variable, exponent)`` pairs with nonzero
exponents, so the empty tuple is the constant monomial.  Polynomials are
immutable mappings from monomials to :class:`fractions.Fraction`.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product as _cartesian
from typing import Callable, Iterable, Mapping, Union

from .errors import OrderMismatch, UnboundVariable, ZeroDenominator, NotLaurent

Rat = Fraction
Monomial = tuple  # tuple[tuple[str, int], ...]

ONE_MONO: Monomial = ()


def rat(value) -> Fraction:
    """Coerce ints, strings like ``"3/4"`` and Fractions to a Fraction."""
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


# -- monomials -------------------------------------------------------------

def mono(**exps: int) -> Monomial:
    return mono_from_dict(exps)


def mono_from_dict(exps: Mapping[str, int]) -> Monomial:
    return tuple(sorted((v, int(e)) for v, e in exps.items() if e))


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        va, ea = a[i]
        vb, eb = b[j]
        if va == vb:
            e = ea + eb
            if e:
                out.append((va, e))
            i += 1
            j += 1
        elif va < vb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out)


def mono_pow(a: Monomial, n: int) -> Monomial:
    if n == 0:
        return ()
    return tuple((v, e * n) for v, e in a)


def mono_inv(a: Monomial) -> Monomial:
    return tuple((v, -e) for v, e in a)


def mono_degree(a: Monomial, among: Iterable[str] | None = None) -> int:
    if among is None:
        return sum(e for _, e in a)
    s = set(among)
    return sum(e for v, e in a if v in s)


def mono_split(a: Monomial, among: frozenset) -> tuple[Monomial, Monomial]:
    """Split into (part in ``among``, remaining part)."""
    inside = tuple(p for p in a if p[0] in among)
    outside = tuple(p for p in a if p[0] not in among)
    return inside, outside


def mono_key(a: Monomial):
    """Graded-lex sort key: total degree first, then the exponent pairs."""
    return (sum(e for _, e in a), a)


# -- Laurent polynomials ---------------------------------------------------

Scalar = Union[int, Fraction]


class LPoly:
    """Laurent polynomial with rational coefficients.  Treat as immutable."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Scalar] | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                if c:
                    clean[m] = c if isinstance(c, Fraction) else Fraction(c)
        self.terms: dict = clean
        self._hash = None

    @staticmethod
    def _raw(terms: dict) -> "LPoly":
        p = LPoly.__new__(LPoly)
        p.terms = terms
        p._hash = None
        return p

    # constructors
    @staticmethod
    def const(c: Scalar) -> "LPoly":
        return LPoly({(): c})

    @staticmethod
    def var(name: str, exp: int = 1) -> "LPoly":
        return LPoly({((name, exp),) if exp else (): 1})

    @staticmethod
    def monomial(m: Monomial, c: Scalar = 1) -> "LPoly":
        return LPoly({m: c})

    # inspection
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def variables(self) -> frozenset:
        return frozenset(v for m in self.terms for v, _ in m)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: mono_key(kv[0]))

    def __len__(self) -> int:
        return len(self.terms)

    # ring operations
    def __add__(self, other) -> "LPoly":
        other = _as_lpoly(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return LPoly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "LPoly":
        return LPoly._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "LPoly":
        other = _as_lpoly(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "LPoly":
        return (-self) + other

    def __mul__(self, other) -> "LPoly":
        if isinstance(other, (int, Fraction)):
            if not other:
                return ZERO
            return LPoly._raw({m: c * other for m, c in self.terms.items()})
        other = _as_lpoly(other)
        if other is NotImplemented:
            return NotImplemented
        out: dict = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                m = mono_mul(ma, mb)
                s = out.get(m, 0) + ca * cb
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return LPoly._raw(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LPoly":
        if n < 0:
            if not self.is_monomial():
                raise NotLaurent("negative power of a non-monomial Laurent polynomial")
            (m, c), = self.terms.items()
            return LPoly._raw({mono_pow(m, n): Fraction(1) / c ** (-n)})
        result = ONE
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = LPoly.const(other)
        if not isinstance(other, LPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self) -> str:
        from .parse import format_lpoly
        return f"LPoly({format_lpoly(self)!r})"

    def __str__(self) -> str:
        from .parse import format_lpoly
        return format_lpoly(self)

    # calculus and filtering
    def diff(self, var: str) -> "LPoly":
        return differentiate(self, var)

    def map_monomials(self, fn: Callable[[Monomial, Fraction], tuple | None]) -> "LPoly":
        out: dict = {}
        for m, c in self.terms.items():
            r = fn(m, c)
            if r is None:
                continue
            m2, c2 = r
            s = out.get(m2, 0) + c2
            if s:
                out[m2] = s
            else:
                out.pop(m2, None)
        return LPoly._raw(out)

    def filter(self, pred: Callable[[Monomial], bool]) -> "LPoly":
        return LPoly._raw({m: c for m, c in self.terms.items() if pred(m)})

    def truncate(self, params: Iterable[str], order: int) -> "LPoly":
        """Drop terms whose total degree in ``params`` exceeds ``order``."""
        ps = frozenset(params)
        return self.filter(lambda m: mono_degree(m, ps) <= order)

    def homogeneous_part(self, params: Iterable[str], degree: int) -> "LPoly":
        ps = frozenset(params)
        return self.filter(lambda m: mono_degree(m, ps) == degree)

    def split_by(self, params: Iterable[str]) -> dict:
        """Map each parameter monomial to its coefficient polynomial."""
        ps = frozenset(params)
        out: dict = {}
        for m, c in self.terms.items():
            inside, outside = mono_split(m, ps)
            out.setdefault(inside, {})[outside] = c
        return {k: LPoly._raw(v) for k, v in out.items()}

    def set_zero(self, names: Iterable[str]) -> "LPoly":
        """Evaluate the listed variables at 0 (error if they appear inversely)."""
        ns = frozenset(names)

        def keep(m):
            for v, e in m:
                if v in ns:
                    if e < 0:
                        raise ZeroDenominator(f"{v} occurs with a negative exponent")
                    return False
            return True
        return self.filter(keep)

    def degree_bounds(self, var: str) -> tuple[int, int]:
        es = [dict(m).get(var, 0) for m in self.terms]
        if not es:
            return (0, 0)
        return (min(es), max(es))


def _as_lpoly(x):
    if isinstance(x, LPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return LPoly.const(x)
    return NotImplemented


ZERO = LPoly()
ONE = LPoly.const(1)


def differentiate(p: LPoly, var: str) -> LPoly:
    out: dict = {}
    for m, c in p.terms.items():
        for idx, (v, e) in enumerate(m):
            if v == var:
                lowered = m[:idx] + (((v, e - 1),) if e != 1 else ()) + m[idx + 1:]
                out[lowered] = out.get(lowered, 0) + c * e
                break
    return LPoly(out)


# -- exact Laurent division ------------------------------------------------

def _lex_lead(p: LPoly, order: tuple) -> Monomial:
    def key(m):
        d = dict(m)
        return tuple(d.get(v, 0) for v in order)
    return max(p.terms, key=key)


def exact_divide(num: LPoly, den: LPoly) -> LPoly | None:
    """Return ``num / den`` as a Laurent polynomial, or None if it is not one."""
    if den.is_zero():
        raise ZeroDenominator("division by zero polynomial")
    if num.is_zero():
        return ZERO
    if den.is_monomial():
        (m, c), = den.terms.items()
        inv = mono_inv(m)
        return LPoly._raw({mono_mul(k, inv): v / c for k, v in num.terms.items()})
    # shift both to honest polynomials, then multivariate division in lex order
    order = tuple(sorted(num.variables() | den.variables()))
    shift_n = {v: -min(0, num.degree_bounds(v)[0]) for v in order}
    shift_d = {v: -min(0, den.degree_bounds(v)[0]) for v in order}
    n = num * LPoly.monomial(mono_from_dict(shift_n))
    d = den * LPoly.monomial(mono_from_dict(shift_d))
    lead_d = _lex_lead(d, order)
    lead_c = d.terms[lead_d]
    ld = dict(lead_d)
    quotient: dict = {}
    rem = n
    while not rem.is_zero():
        lead = _lex_lead(rem, order)
        lm = dict(lead)
        if any(lm.get(v, 0) < ld.get(v, 0) for v in order):
            return None
        qm = mono_mul(lead, mono_inv(lead_d))
        qc = rem.terms[lead] / lead_c
        quotient[qm] = quotient.get(qm, 0) + qc
        rem = rem - LPoly.monomial(qm, qc) * d
    q = LPoly(quotient)
    shift = {v: shift_d[v] - shift_n[v] for v in order}
    return q * LPoly.monomial(mono_from_dict(shift))


# -- rational functions ----------------------------------------------------

class RatFn:
    """Formal quotient of Laurent polynomials; equality by cross-multiplication."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None):
        num = _coerce(num)
        den = ONE if den is None else _coerce(den)
        if den.is_zero():
            raise ZeroDenominator("RatFn with zero denominator")
        if den.is_monomial():
            num = exact_divide(num, den)
            den = ONE
        self.num: LPoly = num
        self.den: LPoly = den

    @staticmethod
    def of(x) -> "RatFn":
        return x if isinstance(x, RatFn) else RatFn(x)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_laurent(self) -> bool:
        return self.den == ONE

    def to_lpoly(self) -> LPoly:
        if self.den == ONE:
            return self.num
        q = exact_divide(self.num, self.den)
        if q is None:
            raise NotLaurent("rational function is not a Laurent polynomial")
        return q

    def try_lpoly(self) -> LPoly | None:
        if self.den == ONE:
            return self.num
        return exact_divide(self.num, self.den)

    def variables(self) -> frozenset:
        return self.num.variables() | self.den.variables()

    def __add__(self, other) -> "RatFn":
        o = _as_ratfn(other)
        if o is NotImplemented:
            return NotImplemented
        if self.den == o.den:
            return RatFn(self.num + o.num, self.den)
        return RatFn(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self) -> "RatFn":
        return RatFn(-self.num, self.den)

    def __sub__(self, other) -> "RatFn":
        o = _as_ratfn(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other) -> "RatFn":
        return (-self) + other

    def __mul__(self, other) -> "RatFn":
        o = _as_ratfn(other)
        if o is NotImplemented:
            return NotImplemented
        return RatFn(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RatFn":
        o = _as_ratfn(other)
        if o is NotImplemented:
            return NotImplemented
        if o.is_zero():
            raise ZeroDenominator("division by zero")
        return RatFn(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other) -> "RatFn":
        return _as_ratfn(other) / self

    def __pow__(self, n: int) -> "RatFn":
        if n >= 0:
            return RatFn(self.num ** n, self.den ** n)
        if self.is_zero():
            raise ZeroDenominator("negative power of zero")
        return RatFn(self.den ** (-n), self.num ** (-n))

    def __eq__(self, other) -> bool:
        o = _as_ratfn(other)
        if o is NotImplemented:
            return NotImplemented
        return self.num * o.den == o.num * self.den

    def __hash__(self):
        raise TypeError("RatFn is unhashable: equality is by cross-multiplication")

    def diff(self, var: str) -> "RatFn":
        n, d = self.num, self.den
        if d == ONE:
            return RatFn(differentiate(n, var))
        return RatFn(differentiate(n, var) * d - n * differentiate(d, var), d * d)

    def __repr__(self) -> str:
        from .parse import format_ratfn
        return f"RatFn({format_ratfn(self)!r})"

    def __str__(self) -> str:
        from .parse import format_ratfn
        return format_ratfn(self)


def _coerce(x) -> LPoly:
    if isinstance(x, LPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return LPoly.const(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to LPoly")


def _as_ratfn(x):
    if isinstance(x, RatFn):
        return x
    if isinstance(x, (LPoly, int, Fraction)):
        return RatFn(x)
    return NotImplemented


# -- substitution ----------------------------------------------------------

def substitute(p, assignment: Mapping[str, object], passthrough: Iterable[str] | None = None) -> RatFn:
    """Simultaneously replace variables of ``p`` by the assigned values.

    Variables listed in ``passthrough`` are left alone; any other variable
    of ``p`` without an assignment raises :class:`UnboundVariable`.
    """
    if isinstance(p, RatFn):
        n = substitute(p.num, assignment, passthrough)
        if p.den == ONE:
            return n
        return n / substitute(p.den, assignment, passthrough)
    p = _coerce(p)
    keep = frozenset(passthrough or ())
    vals: dict = {}
    for v in p.variables():
        if v in assignment:
            r = _as_ratfn(assignment[v])
            if r is NotImplemented:
                raise TypeError(f"cannot substitute a {type(assignment[v]).__name__} for {v}")
            vals[v] = r
        elif v not in keep:
            raise UnboundVariable(v)
    return _subst_lpoly(p, vals)


def _subst_lpoly(p: LPoly, vals: Mapping[str, RatFn]) -> RatFn:
    # per variable: value = N/D.  Monomial N or D are units in the Laurent ring.
    info = {}
    for v, r in vals.items():
        lo, hi = p.degree_bounds(v)
        info[v] = (r.num, r.den, r.num.is_monomial(), r.den == ONE, lo, hi)
    common_den = ONE
    for v, (N, D, n_unit, d_unit, lo, hi) in info.items():
        if hi > 0 and not d_unit:
            common_den = common_den * D ** hi
        if lo < 0:
            if N.is_zero():
                raise ZeroDenominator(f"{v} assigned 0 but occurs with a negative exponent")
            if not n_unit:
                common_den = common_den * N ** (-lo)
    cache: dict = {}

    def factor(v, e):
        key = (v, e)
        f = cache.get(key)
        if f is not None:
            return f
        N, D, n_unit, d_unit, lo, hi = info[v]
        # value^e times the share of the common denominator owned by v
        hi_pos = hi if hi > 0 else 0
        lo_neg = -lo if lo < 0 else 0
        if e >= 0:
            f = N ** e
            if not d_unit:
                f = f * D ** (hi_pos - e)
            if lo_neg and not n_unit:
                f = f * N ** lo_neg
        else:
            f = D ** (-e) if not d_unit else ONE
            if not d_unit:
                f = f * D ** hi_pos
            if n_unit:
                f = f * N ** e
            else:
                f = f * N ** (lo_neg + e)
        cache[key] = f
        return f

    total = ZERO
    for m, c in p.terms.items():
        term = LPoly.const(c)
        rest = []
        for v, e in m:
            if v in info:
                term = term * factor(v, e)
            else:
                rest.append((v, e))
        if rest:
            term = term * LPoly.monomial(tuple(rest))
        # absent variables still contribute their share of the common denominator
        present = {v for v, _ in m}
        for v in info:
            if v not in present:
                term = term * factor(v, 0)
        total = total + term
    return RatFn(total, common_den)


def substitute_lpoly(p: LPoly, assignment: Mapping[str, LPoly], passthrough: Iterable[str] | None = None) -> LPoly:
    """Substitution whose result must again be a Laurent polynomial."""
    return substitute(p, assignment, passthrough).to_lpoly()


# -- truncated jets in parameters ------------------------------------------

def series_inverse(p: LPoly, params: Iterable[str], order: int) -> LPoly:
    """Inverse of ``p`` as a parameter jet; its parameter-free part must be a monomial."""
    ps = frozenset(params)
    unit = p.homogeneous_part(ps, 0)
    if not unit.is_monomial():
        raise NotLaurent("series inverse needs a monomial leading part")
    u_inv = unit ** -1
    r = (p - unit) * u_inv
    acc = ONE
    power = ONE
    for _ in range(order):
        power = (power * (-r)).truncate(ps, order)
        if power.is_zero():
            break
        acc = acc + power
    return (acc * u_inv).truncate(ps, order)


def ratfn_to_jet(r: RatFn, params: Iterable[str], order: int) -> LPoly:
    ps = tuple(params)
    if r.den == ONE:
        return r.num.truncate(ps, order)
    q = r.try_lpoly()
    if q is not None:
        return q.truncate(ps, order)
    return (r.num.truncate(ps, order) * series_inverse(r.den, ps, order)).truncate(ps, order)


def jet_substitute(p: LPoly, assignment: Mapping[str, LPoly], params: Iterable[str], order: int,
                   passthrough: Iterable[str] | None = None) -> LPoly:
    """Substitute jet values into ``p`` and truncate at ``order`` in ``params``.

    Negative exponents are expanded through :func:`series_inverse`.
    """
    ps = tuple(params)
    keep = frozenset(passthrough or ()) | frozenset(ps)
    pos: dict = {}
    neg: dict = {}

    def power(v, e):
        table = pos if e > 0 else neg
        key = (v, abs(e))
        if key in table:
            return table[key]
        base = assignment[v] if e > 0 else series_inverse(assignment[v], ps, order)
        val = ONE
        for _ in range(abs(e)):
            val = (val * base).truncate(ps, order)
        table[key] = val
        return val

    total = ZERO
    for m, c in p.terms.items():
        term = LPoly.const(c)
        for v, e in m:
            if v in assignment:
                term = (term * power(v, e)).truncate(ps, order)
            elif v in keep:
                term = term * LPoly.monomial(((v, e),))
            else:
                raise UnboundVariable(v)
        total = total + term
    return total.truncate(ps, order)


def ratfn_truncated_zero(r: RatFn, params: Iterable[str], order: int) -> bool:
    """True when ``r`` vanishes modulo parameter degree ``order + 1``.

    Valid when the denominator does not vanish at parameter 0, which is the
    case for all chart data handled here.
    """
    return r.num.truncate(params, order).is_zero()


class ParamJet:
    """Truncated power series in parameters with LPoly or Multivector coefficients."""

    __slots__ = ("params", "order", "terms")

    def __init__(self, params: Iterable[str], order: int, terms: Mapping[tuple, object] | None = None):
        self.params = tuple(params)
        self.order = int(order)
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(e)
            if len(e) != len(self.params):
                raise ValueError("exponent vector length does not match parameter count")
            if sum(e) <= self.order and not _is_zero(c):
                clean[e] = c
        self.terms = clean

    @staticmethod
    def from_lpoly(p, params: Iterable[str], order: int) -> "ParamJet":
        """Split an LPoly or a Multivector with parameter-dependent coefficients."""
        params = tuple(params)
        if isinstance(p, LPoly):
            pieces = p.split_by(params).items()
        else:
            by_mono: dict = {}
            for J, c in p.comps.items():
                for pm, coeff in c.split_by(params).items():
                    by_mono.setdefault(pm, {})[J] = coeff
            pieces = [(pm, p.like(comps)) for pm, comps in by_mono.items()]
        out = {}
        for pm, coeff in pieces:
            d = dict(pm)
            if any(d.get(v, 0) < 0 for v in params):
                raise NotLaurent("negative parameter exponent in a jet")
            out[tuple(d.get(v, 0) for v in params)] = coeff
        return ParamJet(params, order, out)

    def to_lpoly(self):
        """Inverse of :meth:`from_lpoly`."""
        total = None
        for e, c in sorted(self.terms.items()):
            mono_p = LPoly.monomial(mono_from_dict(dict(zip(self.params, e))))
            piece = c * mono_p if isinstance(c, LPoly) else c.scale(mono_p)
            total = piece if total is None else total + piece
        return ZERO if total is None else total

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamJet):
            return NotImplemented
        return self.params == other.params and self.order == other.order and self.terms == other.terms

    def __repr__(self) -> str:
        return f"ParamJet(order={self.order}, terms={self.terms!r})"


def _is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return c == 0
    return c.is_zero()


def jet_combine(a: ParamJet, b: ParamJet, op: str) -> ParamJet:
    """Combine two jets with ``op`` in {"add", "mul", "bracket"}, truncating."""
    if a.order != b.order:
        raise OrderMismatch(f"orders {a.order} and {b.order} differ")
    if a.params != b.params:
        raise OrderMismatch("jets live in different parameter sets")
    if op == "add":
        out = dict(a.terms)
        for e, c in b.terms.items():
            out[e] = out[e] + c if e in out else c
        return ParamJet(a.params, a.order, out)
    if op in ("mul", "bracket"):
        if op == "mul":
            def combine(x, y):
                from .multivector import Multivector, wedge
                if isinstance(x, Multivector):
                    return wedge(x, y)
                return x * y
        else:
            from .multivector import schouten as combine
        out: dict = {}
        for (ea, ca), (eb, cb) in _cartesian(a.terms.items(), b.terms.items()):
            e = tuple(i + j for i, j in zip(ea, eb))
            if sum(e) > a.order:
                continue
            val = combine(ca, cb)
            out[e] = out[e] + val if e in out else val
        return ParamJet(a.params, a.order, out)
    raise ValueError(f"unknown jet operation {op!r}")
