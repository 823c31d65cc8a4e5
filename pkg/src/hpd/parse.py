"""Expression grammar and canonical printer.

Grammar (no implicit multiplication)::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := '-' factor | atom ('^' (['-'] INT | atom))*
    atom   := INT | NAME | '(' expr ')'

A name ``d<var>`` where ``<var>`` is a chart variable is the coordinate
vector field of that variable; ``^`` between polyvector operands is the
wedge product, between a scalar and an integer it is a power.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Sequence

from .errors import ParseError
from .exactalg import LPoly, ONE, RatFn, ZERO, mono_key
from .multivector import Multivector, sort_sign

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    raw = text.encode()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        start = m.start(m.lastindex)
        offset = len(text[:start].encode())
        if m.group(1) is not None:
            tokens.append(("INT", m.group(1), offset))
        elif m.group(2) is not None:
            tokens.append(("NAME", m.group(2), offset))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ParseError(f"unexpected character {ch!r}", offset)
            tokens.append((ch, ch, offset))
        pos = m.end()
    tokens.append(("END", "", len(raw)))
    return tokens


class _PV:
    """Intermediate value: {tuple of variable names in wedge order: RatFn}."""

    __slots__ = ("parts",)

    def __init__(self, parts):
        self.parts = {k: v for k, v in parts.items() if not v.is_zero()}

    @staticmethod
    def scalar(r) -> "_PV":
        return _PV({(): RatFn.of(r)})

    def is_scalar(self) -> bool:
        return all(k == () for k in self.parts)

    def scalar_value(self) -> RatFn:
        return self.parts.get((), RatFn(ZERO))

    def add(self, other, sign=1):
        out = dict(self.parts)
        for k, v in other.parts.items():
            v = v if sign > 0 else -v
            out[k] = out[k] + v if k in out else v
        return _PV(out)

    def mul(self, other):
        out = {}
        for ka, va in self.parts.items():
            for kb, vb in other.parts.items():
                k = ka + kb
                if len(set(k)) != len(k):
                    continue
                v = va * vb
                out[k] = out[k] + v if k in out else v
        return _PV(out)


class _Parser:
    def __init__(self, text, variables, allow_rational):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.variables = None if variables is None else tuple(variables)
        self.allow_rational = allow_rational
        self.seen: list = []

    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            raise ParseError(f"expected {kind}, found {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> _PV:
        if self.peek()[0] == "END":
            raise ParseError("empty expression", 0)
        val = self.expr()
        tok = self.peek()
        if tok[0] != "END":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2])
        return val

    def expr(self):
        sign = 1
        if self.peek()[0] in ("+", "-"):
            sign = -1 if self.take()[0] == "-" else 1
        val = self.term()
        if sign < 0:
            val = _PV({}).add(val, -1)
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            val = val.add(self.term(), 1 if op == "+" else -1)
        return val

    def term(self):
        val = self.factor()
        while self.peek()[0] in ("*", "/"):
            op, _, off = self.take()
            rhs = self.factor()
            if op == "*":
                val = val.mul(rhs)
            else:
                if not rhs.is_scalar():
                    raise ParseError("division by a polyvector", off)
                d = rhs.scalar_value()
                if d.is_zero():
                    raise ParseError("division by zero", off)
                if not self.allow_rational and not (d.num.is_monomial() and d.den == ONE):
                    raise ParseError("division by a non-monomial", off)
                val = _PV({k: v / d for k, v in val.parts.items()})
        return val

    def factor(self):
        if self.peek()[0] == "-":
            self.take()
            return _PV({}).add(self.factor(), -1)
        val = self.atom()
        while self.peek()[0] == "^":
            _, _, off = self.take()
            nxt = self.peek()
            if nxt[0] == "INT" or (nxt[0] == "-" and self.peek(1)[0] == "INT"):
                neg = False
                if nxt[0] == "-":
                    self.take()
                    neg = True
                e = int(self.take("INT")[1])
                if not val.is_scalar():
                    raise ParseError("power of a polyvector", off)
                base = val.scalar_value()
                if neg and base.is_zero():
                    raise ParseError("negative power of zero", off)
                val = _PV.scalar(base ** (-e if neg else e))
            else:
                rhs = self.atom()
                if val.is_scalar() or rhs.is_scalar():
                    raise ParseError("'^' between operands that are not both polyvectors", off)
                val = val.mul(rhs)
        return val

    def atom(self):
        kind, text, off = self.peek()
        if kind == "INT":
            self.take()
            return _PV.scalar(LPoly.const(int(text)))
        if kind == "NAME":
            self.take()
            basis = self._basis_name(text)
            if basis is not None:
                if basis not in self.seen:
                    self.seen.append(basis)
                return _PV({(basis,): RatFn(ONE)})
            return _PV.scalar(LPoly.var(text))
        if kind == "(":
            self.take()
            val = self.expr()
            self.take(")")
            return val
        raise ParseError(f"unexpected token {text or 'end of input'!r}", off)

    def _basis_name(self, name):
        if len(name) < 2 or name[0] != "d":
            return None
        rest = name[1:]
        if self.variables is not None:
            if rest in self.variables and name not in self.variables:
                return rest
            return None
        return rest


def _to_lpoly(r: RatFn, text: str) -> LPoly:
    q = r.try_lpoly()
    if q is None:
        raise ParseError("expression is not a Laurent polynomial", 0)
    return q


def parse_expression(text: str, variables: Sequence[str] | None = None, chart: str | None = None):
    """Parse to an LPoly, or to a Multivector when basis symbols occur.

    ``variables`` fixes the chart coordinate order; by default the chart
    consists of the basis-symbol variables in order of first appearance.
    """
    p = _Parser(text, variables, allow_rational=False)
    val = p.parse()
    if val.is_scalar():
        return _to_lpoly(val.scalar_value(), text)
    if variables is None:
        variables = tuple(p.seen)
    variables = tuple(variables)
    degrees = {len(k) for k in val.parts}
    if len(degrees) != 1:
        raise ParseError("polyvector terms of mixed degree", 0)
    deg = degrees.pop()
    comps: dict = {}
    for names, coeff in val.parts.items():
        J, sign = sort_sign([variables.index(v) for v in names])
        c = _to_lpoly(coeff, text)
        c = c if sign > 0 else -c
        comps[J] = comps[J] + c if J in comps else c
    return Multivector(variables, deg, comps, chart)


def parse_polynomial(text: str) -> LPoly:
    val = parse_expression(text)
    if isinstance(val, Multivector):
        raise ParseError("expected a scalar expression", 0)
    return val


def parse_rational(text: str, variables: Sequence[str] | None = None) -> RatFn:
    """Scalar expression that may divide by arbitrary polynomials."""
    p = _Parser(text, variables, allow_rational=True)
    val = p.parse()
    if not val.is_scalar():
        raise ParseError("expected a scalar expression", 0)
    return val.scalar_value()


def parse_multivector(text: str, variables: Sequence[str], degree: int | None = None,
                      chart: str | None = None) -> Multivector:
    val = parse_expression(text, variables, chart)
    if isinstance(val, LPoly):
        if val.is_zero() and degree is not None:
            return Multivector(variables, degree, {}, chart)
        val = Multivector(variables, 0, {(): val}, chart)
    if degree is not None and val.degree != degree and not val.is_zero():
        raise ParseError(f"expected degree {degree}, found {val.degree}", 0)
    if val.is_zero() and degree is not None:
        return Multivector(variables, degree, {}, chart)
    return val


# -- printing -----------------------------------------------------------------

def _format_coeff(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"({c.numerator}/{c.denominator})"


def _format_monomial(m, order: Sequence[str] | None = None) -> str:
    if order is not None:
        rank = {v: i for i, v in enumerate(order)}
        m = sorted(m, key=lambda p: (rank.get(p[0], len(rank)), p[0]))
    parts = []
    for v, e in m:
        parts.append(v if e == 1 else f"{v}^{e}")
    return "*".join(parts)


def _signed_terms(p: LPoly, order=None):
    for m, c in p.sorted_terms():
        neg = c < 0
        a = -c if neg else c
        body = _format_monomial(m, order)
        if not body:
            text = _format_coeff(a)
        elif a == 1:
            text = body
        else:
            text = f"{_format_coeff(a)}*{body}"
        yield neg, text


def _join(terms) -> str:
    out = []
    for k, (neg, text) in enumerate(terms):
        if k == 0:
            out.append(f"-{text}" if neg else text)
        else:
            out.append(f" - {text}" if neg else f" + {text}")
    return "".join(out) if out else "0"


def format_lpoly(p: LPoly, order: Sequence[str] | None = None) -> str:
    return _join(list(_signed_terms(p, order)))


def format_ratfn(r: RatFn) -> str:
    if r.den == ONE:
        return format_lpoly(r.num)
    return f"({format_lpoly(r.num)})/({format_lpoly(r.den)})"


def format_multivector(m: Multivector) -> str:
    if m.degree == 0:
        return format_lpoly(m.comps.get((), ZERO), m.variables)
    pieces = []
    for J in sorted(m.comps):
        basis = "^".join(f"d{m.variables[i]}" for i in J)
        c = m.comps[J]
        if len(c) == 1:
            (mono, coef), = c.terms.items()
            neg = coef < 0
            a = -coef if neg else coef
            body = _format_monomial(mono, m.variables)
            head = [] if a == 1 else [_format_coeff(a)]
            if body:
                head.append(body)
            head.append(basis)
            pieces.append((neg, "*".join(head)))
        else:
            pieces.append((False, f"({format_lpoly(c, m.variables)})*{basis}"))
    return _join(pieces)


def sorted_polyvector_terms(m: Multivector):
    """Deterministic (index tuple, monomial, coefficient) triples."""
    for J in sorted(m.comps):
        for mono, c in sorted(m.comps[J].terms.items(), key=lambda kv: mono_key(kv[0])):
            yield J, mono, c
