from fractions import Fraction
from itertools import combinations

import pytest
import sympy as sp
from hypothesis import assume, given, settings, strategies as st

from hpd.cech import CechComplex, TotalCochain, enumerate_slice, hypercohomology, project_to_basis
from hpd.errors import NotACocycle, OutOfTruncation
from hpd.exactalg import LPoly
from hpd.family import P2_CUBIC5, projective_atlas
from hpd.linalg import rank
from hpd.multivector import Multivector, bracket_any
from hpd.parse import parse_multivector, parse_polynomial

XW = ("x", "w")
ATLAS = projective_atlas(2)
LAMBDA0 = parse_multivector("x*dx^dw", XW, 2, "U0")


@pytest.fixture(scope="module")
def cx():
    return CechComplex(ATLAS, LAMBDA0)


@pytest.fixture(scope="module")
def h1():
    return hypercohomology(ATLAS, LAMBDA0, 1)


def zero_lambda(atlas):
    return {c.name: Multivector(c.variables, 2, {}, c.name) for c in atlas.charts}


# -- dimensions ----------------------------------------------------------------------

def test_p2_dimensions(h1):
    assert h1.total == 5
    assert h1.stable
    h2 = hypercohomology(ATLAS, LAMBDA0, 2)
    assert h2.total == 0 and h2.stable


def sl3_fields():
    """Global vector fields of P^2 in the chart (x, w)."""
    x, w = sp.symbols("x w")
    euler = (x, w)
    fields = [(1, 0), (0, 1), (x, 0), (w, 0), (0, x), (0, w),
              (x * euler[0], x * euler[1]), (w * euler[0], w * euler[1])]
    return [(sp.sympify(a), sp.sympify(b)) for a, b in fields]


def test_h0_matches_commutant_of_lambda0():
    # oracle: vector fields X in sl_3 with L_X (x dx^dw) = 0, by sympy linear algebra
    x, w = sp.symbols("x w")
    cs = sp.symbols("c0:8")
    X = [sum(c * f[i] for c, f in zip(cs, sl3_fields())) for i in range(2)]
    pi = x
    lie = sp.expand(X[0] * sp.diff(pi, x) + X[1] * sp.diff(pi, w) - pi * (sp.diff(X[0], x) + sp.diff(X[1], w)))
    eqs = sp.Poly(lie, x, w).coeffs() if lie != 0 else []
    M = sp.Matrix([[sp.diff(e, c) for c in cs] for e in eqs])
    expected = 8 - M.rank()
    assert hypercohomology(ATLAS, LAMBDA0, 0).total == expected == 3


def test_zero_poisson_structure_gives_sheaf_cohomology():
    lam = zero_lambda(ATLAS)
    # H^0(T) = sl_3, H^0(wedge^2 T) = H^0(O(3)), H^1(T) = H^1(O(3)) = 0
    assert hypercohomology(ATLAS, lam, 0).total == 8
    assert hypercohomology(ATLAS, lam, 1).total == 10
    assert hypercohomology(ATLAS, lam, 2).total == 0


def test_projective_line():
    atlas = projective_atlas(1)
    lam = zero_lambda(atlas)
    assert hypercohomology(atlas, lam, 0).total == 3
    assert hypercohomology(atlas, lam, 1).total == 0


def test_stability_box_eight_and_nine(h1):
    other = hypercohomology(ATLAS, LAMBDA0, 1, box=9, check_stability=False)
    assert other.dims == h1.dims


def test_threads_do_not_change_results(h1):
    threaded = hypercohomology(ATLAS, LAMBDA0, 1, threads=3, check_stability=False)
    assert threaded.dims == h1.dims
    assert [c for _, c in threaded.basis] == [c for _, c in h1.basis]


def test_enumerate_slice(cx):
    w = cx.weights()[len(cx.weights()) // 2]
    sl = enumerate_slice(ATLAS, LAMBDA0, 0, 2, w)
    assert len(sl) > 0
    assert all(lab[0] in cx.simplices[0] and lab[1] == 2 for lab in sl.basis)
    assert all(cx.weight_of_label(lab) == w for lab in sl.basis)


# -- D^2 = 0 ----------------------------------------------------------------------------

def random_cochain(cx, data, k):
    vals = {}
    for q in range(1, cx.n + 1):
        p = k + 1 - q
        for I in cx.simplices.get(p, []):
            if not data.draw(st.booleans()):
                continue
            vs = cx.vars[I[0]]
            comps = {}
            for J in combinations(range(cx.n), q):
                terms = data.draw(st.dictionaries(
                    st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
                    st.integers(-4, 4).filter(bool), max_size=2))
                poly = {}
                for a, c in terms.items():
                    if cx.admissible(I, a):
                        poly[tuple(sorted((v, e) for v, e in zip(vs, a) if e))] = Fraction(c)
                if poly:
                    comps[J] = LPoly(poly)
            vals[(I, q)] = Multivector(vs, q, comps, cx.names[I[0]])
    return TotalCochain(k, vals)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_d_squared_is_zero(cx, data):
    k = data.draw(st.integers(0, 2))
    c = random_cochain(cx, data, k)
    assume(not c.is_zero())
    assert cx.differential(cx.differential(c)).is_zero()


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_solve_exact_witness(cx, data):
    x = random_cochain(cx, data, 0)
    target = cx.differential(x)
    y = cx.solve_exact(target)
    assert y is not None
    assert cx.differential(y) == target


def test_differential_components(cx):
    # D on a 0-cochain: vertical part [L0, g], horizontal part g_j - push(g_k)
    g = parse_multivector("w*dw", XW, 1, "U0")
    c = TotalCochain(0, {((0,), 1): g})
    d = cx.differential(c)
    assert d.values[((0,), 2)] == bracket_any(LAMBDA0, g)
    assert d.values[((0, 1), 1)] == g
    assert d.values[((0, 2), 1)] == g


# -- the five cubic classes ------------------------------------------------------------------

def spread(cx, m):
    vals = {}
    for i, name in enumerate(cx.names):
        pushed = cx.push_to(m, 0, i)
        for poly in pushed.comps.values():
            for mono in poly.terms:
                assert all(e >= 0 for _, e in mono), f"not regular on {name}"
        vals[((i,), 2)] = pushed
    return TotalCochain(1, vals)


def test_cubic_bivectors_extend_to_independent_classes(cx, h1):
    coords = []
    for mono in P2_CUBIC5:
        m = Multivector(XW, 2, {(0, 1): parse_polynomial(mono)}, "U0")
        c = spread(cx, m)
        assert cx.differential(c).is_zero()
        coords.append(project_to_basis(c, h1))
    assert rank([{i: v for i, v in enumerate(col) if v} for col in coords]) == 5


def test_project_rejects_non_cocycle(h1, cx):
    c = TotalCochain(1, {((0,), 2): parse_multivector("x^2*dx^dw", XW, 2, "U0")})
    with pytest.raises(NotACocycle):
        project_to_basis(c, h1)


def test_truncation_limits(cx, h1):
    with pytest.raises(OutOfTruncation):
        cx.cochain_labels(TotalCochain(0, {((0,), 1): parse_multivector("x^-1*dw", XW, 1, "U0")}))
    big = TotalCochain(0, {((0,), 1): parse_multivector("x^20*dw", XW, 1, "U0")})
    assert cx.solve_exact(cx.differential(big)) is None
    with pytest.raises(OutOfTruncation):
        project_to_basis(cx.differential(big), h1)
