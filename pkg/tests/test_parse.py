import pytest
from hypothesis import given, settings

from hpd.errors import ParseError
from hpd.exactalg import LPoly
from hpd.multivector import Multivector
from hpd.parse import (format_lpoly, format_multivector, parse_expression, parse_multivector,
                       parse_polynomial, parse_rational)

from strategies import lpolys, multivectors

XW = ("x", "w")


def test_monomial():
    p = parse_expression("x^2*w")
    assert p == LPoly({(("w", 1), ("x", 2)): 1})
    assert p.terms[(("w", 1), ("x", 2))] == 1


def test_bivector():
    m = parse_expression("x*dx^dw")
    assert isinstance(m, Multivector)
    assert m.variables == XW and m.degree == 2
    assert m.comps == {(0, 1): LPoly.var("x")}


def test_vector_field_roundtrip():
    m = parse_expression("(1/2)*x^-1*dw", XW)
    assert m.degree == 1
    assert m.comps == {(1,): parse_polynomial("(1/2)*x^-1")}
    assert format_multivector(m) == "(1/2)*x^-1*dw"


def test_wedge_order_sign():
    assert parse_expression("dw^dx", XW) == parse_expression("-dx^dw", XW)
    assert parse_expression("dx^dx", XW).is_zero()


def test_division_rules():
    assert parse_polynomial("x/w") == parse_polynomial("x*w^-1")
    with pytest.raises(ParseError):
        parse_polynomial("1/(1+x)")
    r = parse_rational("1/(1+x)")
    assert r.den == parse_polynomial("1 + x")


@pytest.mark.parametrize("text, offset", [
    ("x +* w", 3),
    ("x^", 2),
    ("(x + w", 6),
    ("x $ w", 2),
    ("", 0),
    ("dx^2", 2),
])
def test_error_offsets(text, offset):
    with pytest.raises(ParseError) as info:
        parse_expression(text, XW)
    assert info.value.offset == offset
    assert str(info.value).endswith(f"at byte {offset}")


def test_non_ascii_rejected_with_offset():
    with pytest.raises(ParseError) as info:
        parse_expression("x + é")
    assert info.value.offset == 4


def test_degree_checks():
    with pytest.raises(ParseError):
        parse_multivector("x*dx", XW, degree=2)
    with pytest.raises(ParseError):
        parse_expression("dx + dx^dw", XW)
    assert parse_multivector("0", XW, degree=2).is_zero()


def test_printer_canonical_forms():
    assert format_lpoly(parse_polynomial("x^2*w")) == "w*x^2"
    assert format_lpoly(LPoly()) == "0"
    assert format_lpoly(parse_polynomial("-x - 1")) == "-1 - x"
    assert format_multivector(parse_expression("x*dx^dw + w*dx^dw", XW)) == "(w + x)*dx^dw"


@settings(max_examples=300, deadline=None)
@given(lpolys(low=-2, high=3))
def test_polynomial_roundtrip(p):
    text = format_lpoly(p)
    assert parse_polynomial(text) == p
    assert format_lpoly(parse_polynomial(text)) == text


@settings(max_examples=300, deadline=None)
@given(multivectors(2, ("x", "y", "z"), low=-1, high=2))
def test_multivector_roundtrip(m):
    text = format_multivector(m)
    back = parse_multivector(text, m.variables, 2)
    assert back == m
    assert format_multivector(back) == text
