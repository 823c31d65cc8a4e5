from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from hpd.cech import CechComplex, TotalCochain, hypercohomology, zero_cochain
from hpd.deformation import infinitesimal_cocycle
from hpd.errors import NotSurjective, PrerequisiteViolated
from hpd.exactalg import LPoly
from hpd.family import affine_atlas, build_example, projective_atlas, pullback, recoordinatize
from hpd.mcsolver import (Truncation, bernoulli, basis_from_report, complete_family, completeness_defect,
                          cup_bracket, mc_defect, mc_functional, seed_solution, solve_existence, solve_order,
                          verify_congruences)
from hpd.multivector import Multivector
from hpd.parse import format_lpoly, parse_polynomial, parse_multivector, parse_rational as R

from oracles import jacobiator, mv_to_dict

P2_VARS = ("x", "w")


@pytest.fixture(scope="module")
def p2_h1():
    return hypercohomology(projective_atlas(2), parse_multivector("x*dx^dw", P2_VARS, 2, "U0"), 1)


@pytest.fixture(scope="module")
def p2_target():
    return build_example("p2")


# -- truncated Lie helpers ------------------------------------------------------

def test_bernoulli_against_sympy():
    assert bernoulli(1) == Fraction(-1, 2)
    for n in [0] + list(range(2, 16)):
        b = sp.bernoulli(n)
        assert bernoulli(n) == Fraction(int(b.p), int(b.q))


def _field(coeff_x: str, coeff_w: str) -> Multivector:
    return parse_multivector(f"({coeff_x})*dx + ({coeff_w})*dw", P2_VARS, 1)


small = st.sampled_from(["0", "1", "x", "w", "x*w", "x^2", "w^2", "-2*x"])


@settings(max_examples=30, deadline=None)
@given(small, small, small, small, small)
def test_bch_composes_flows(a, b, c, d, e):
    tr = Truncation(("t",), 3)
    X = _field(f"t*({a}) + t^2*({b})", f"t*({c})")
    Y = _field(f"t*({d})", f"t*({e}) + t^2*({a})")
    f = parse_multivector(f"({b})*dx^dw", P2_VARS, 2)
    Z = tr.bch(X, Y)
    assert tr.exp_ad(Z, f, +1) == tr.exp_ad(X, tr.exp_ad(Y, f, +1), +1)


def test_bch_degenerate_cases():
    tr = Truncation(("t",), 4)
    X = _field("t*x + t^2*w", "t*x*w")
    zero = _field("0", "0")
    assert tr.bch(X, zero) == X
    assert tr.bch(X, -X).is_zero()


# -- existence ------------------------------------------------------------------

def test_existence_clean_on_p2(p2_h1):
    sol = solve_existence(p2_h1.complex, basis_from_report(p2_h1), 4)
    assert sol.complete and sol.ledger_clean
    assert sol.order == 4
    assert mc_functional(sol.beta, p2_h1.complex, sol.params, 4).is_zero()


def test_first_order_solution_is_linear(p2_h1):
    basis = basis_from_report(p2_h1)
    sol = solve_existence(p2_h1.complex, basis, 1)
    expected = zero_cochain(1)
    for u, b in enumerate(basis):
        expected = expected + b.scale(LPoly.var(f"t{u + 1}"))
    assert sol.beta == expected
    assert sol.ledger == [{"order": 1, "obstructions": []}]


def test_empty_basis(p2_h1):
    sol = solve_existence(p2_h1.complex, [], 3)
    assert sol.beta.is_zero() and sol.ledger_clean


def test_gauge_shifted_basis_stays_clean(p2_h1):
    cx = p2_h1.complex
    gauge = cx.differential(TotalCochain(0, {((0,), 1): parse_multivector("x*dx + w*dw", P2_VARS, 1, "U0")}))
    assert not gauge.is_zero()
    basis = basis_from_report(p2_h1)
    shifted = [basis[0] + gauge, basis[1], basis[2] + gauge.scale(2)]
    sol = solve_existence(cx, shifted, 3)
    assert sol.ledger_clean
    assert mc_functional(sol.beta, cx, sol.params, 3).is_zero()


def test_order_two_defect_is_half_bracket(p2_h1):
    cx = p2_h1.complex
    basis = basis_from_report(p2_h1)
    ps = ("t1", "t2", "t3")
    beta = zero_cochain(1)
    for t, b in zip(ps, basis[:3]):
        beta = beta + b.scale(LPoly.var(t))
    defect = mc_defect(beta, cx, ps, 2)
    assert cx.differential(defect).is_zero()
    assert defect == cup_bracket(beta, beta, cx).scale(Fraction(1, 2)).homogeneous_part(ps, 2)
    # H^2 vanishes here, so the defect is exact
    assert hypercohomology(projective_atlas(2), cx.lam[0], 2).total == 0
    assert not isinstance(solve_order(defect, cx, ps), list)


def test_solve_order_witness(p2_h1):
    cx = p2_h1.complex
    y = TotalCochain(1, {((0,), 2): parse_multivector("x^2*dx^dw", P2_VARS, 2, "U0"),
                         ((0, 1), 1): parse_multivector("x*dw", P2_VARS, 1, "U0")})
    defect = cx.differential(y).scale(LPoly.var("t1", 2))
    x = solve_order(defect, cx, ("t1",))
    assert (cx.differential(x) + defect).is_zero()
    assert solve_order(zero_cochain(2), cx, ("t1",)).is_zero()


def test_prerequisite_checked(p2_h1):
    cx = p2_h1.complex
    bogus = TotalCochain(1, {((0,), 2): parse_multivector("t1*w^3*dx^dw", P2_VARS, 2, "U0")})
    with pytest.raises(PrerequisiteViolated):
        mc_defect(bogus, cx, ("t1",), 2)


def test_order_monotone(p2_h1):
    basis = basis_from_report(p2_h1)[:3]
    low = solve_existence(p2_h1.complex, basis, 2)
    high = solve_existence(p2_h1.complex, basis, 3)
    assert high.beta.truncate(high.params, 2) == low.beta


AFFINE = ("x", "y", "z")


@pytest.fixture(scope="module")
def affine_cx():
    atlas = affine_atlas(AFFINE)
    return atlas, CechComplex(atlas, parse_multivector("0", AFFINE, 2), box=4)


def test_obstruction_on_affine_space(affine_cx):
    atlas, cx = affine_cx
    text = "z*dx^dy + x*y*dy^dz + y^2*dx^dz"
    pi = parse_multivector(text, AFFINE, 2, atlas.names[0])
    # independent check that pi is not Poisson
    assert any(v != 0 for v in jacobiator(mv_to_dict(pi), AFFINE).values())
    sol = solve_existence(cx, [TotalCochain(1, {((0,), 2): pi})], 3)
    assert not sol.complete and sol.order == 1
    (entry,) = sol.ledger[1]["obstructions"]
    assert entry["monomial"] == "t1^2"
    assert any(Fraction(c) for c in entry["coordinates"])
    # doubling the first-order term quadruples the obstruction
    doubled = solve_existence(cx, [TotalCochain(1, {((0,), 2): pi.scale(2)})], 3)
    (entry2,) = doubled.ledger[1]["obstructions"]
    assert entry2["weight"] == entry["weight"]
    assert [Fraction(c) for c in entry2["coordinates"]] == [4 * Fraction(c) for c in entry["coordinates"]]


def test_poisson_direction_unobstructed(affine_cx):
    atlas, cx = affine_cx
    # linear Poisson structure of so(3)
    q = parse_multivector("z*dx^dy + x*dy^dz - y*dx^dz", AFFINE, 2, atlas.names[0])
    assert jacobiator(mv_to_dict(q), AFFINE) == {}
    sol = solve_existence(cx, [TotalCochain(1, {((0,), 2): q})], 3)
    assert sol.complete and sol.ledger_clean


# -- completeness ---------------------------------------------------------------

def _pullback(target, h: dict, V: int = 3):
    return pullback(target, {t: parse_polynomial(e) for t, e in h.items()}, ("s1",), V)


def test_completeness_recovers_pullback(p2_target):
    test = _pullback(p2_target, {"t1": "s1 + s1^2"})
    sol = complete_family(p2_target, test, 3)
    h = sol.to_dict()["h"]
    assert h == {"t1": "s1 + s1^2", "t2": "0", "t3": "0", "t4": "0", "t5": "0"}
    assert sol.g == seed_solution(p2_target, test).g
    assert sol.gauge_dim == 3
    assert verify_congruences(p2_target, test, sol, 3).ok


def test_completeness_through_coordinate_change(p2_target):
    test = _pullback(p2_target, {"t1": "s1 + s1^2", "t3": "s1^2"})
    test = recoordinatize(test, "U0", P2_VARS, (R("x/(1-s1*x)"), R("w+s1*x")),
                          (R("x/(1+s1*x)"), R("w-s1*x/(1+s1*x)")))
    sol = complete_family(p2_target, test, 3)
    h = sol.to_dict()["h"]
    assert h["t1"] == "s1 + s1^2" and h["t3"] == "s1^2"
    assert h["t2"] == h["t4"] == h["t5"] == "0"
    # g undoes the change on U0 up to order 3
    x, w = (parse_polynomial(v) for v in P2_VARS)
    s = parse_polynomial("s1")
    assert sol.g["U0"][0] == x + s * x ** 2 + s ** 2 * x ** 3 + s ** 3 * x ** 4
    assert verify_congruences(p2_target, test, sol, 3).ok


def test_identity_pullback(p2_target):
    ss = tuple(f"s{u}" for u in range(1, 6))
    test = pullback(p2_target, {f"t{u}": LPoly.var(s) for u, s in enumerate(ss, 1)}, ss, 2)
    sol = complete_family(p2_target, test, 2)
    assert {t: format_lpoly(e) for t, e in sol.h.items()} == {f"t{u}": f"s{u}" for u in range(1, 6)}


def test_not_surjective():
    hn = build_example("hirzebruch_nagata", m=2, k=1)
    with pytest.raises(NotSurjective):
        complete_family(hn, hn, 2)


def test_corrupted_partial_rejected(p2_target):
    test = _pullback(p2_target, {"t1": "s1"})
    partial = seed_solution(p2_target, test)
    with pytest.raises(PrerequisiteViolated):
        completeness_defect(p2_target, test, partial, 2)


def test_second_order_defect_is_pulled_back_ks(p2_target):
    test = _pullback(p2_target, {"t1": "s1^2"})
    seed = seed_solution(p2_target, test)
    cx = CechComplex(p2_target.central_atlas(), p2_target.central_bivectors())
    assert completeness_defect(p2_target, test, seed, 1, cx).is_zero()
    defect = completeness_defect(p2_target, test, seed, 2, cx)
    ks = infinitesimal_cocycle(p2_target, "t1").to_cochain(cx)
    assert defect == ks.scale(-LPoly.var("s1", 2))
