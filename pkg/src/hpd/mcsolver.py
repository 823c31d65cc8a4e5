"""Order-by-order formal solvers: Maurer-Cartan existence and completeness.

A degree-1 total cochain ``beta = (lam, theta)`` with parameter-dependent
coefficients describes a deformed gluing: chart j carries the bivector
``L0 + lam_j`` and the transition from chart k to chart j is the central
transition followed by the time-1 flow of ``theta_jk``.  The gluing is
consistent exactly when the three components of :func:`mc_functional`
vanish.  Their linear part is ``D beta``; the quadratic part is the
Čech-Schouten bracket ``1/2 [beta, beta]``; higher terms come from the
exponentials of the flows.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Sequence

from .cech import (CechComplex, CohomologyReport, TotalCochain, _run_slices, cochain_to_json,
                   project_to_basis, zero_cochain)
from .errors import (ChartMismatch, NotACocycle, NotSurjective, OutOfTruncation, PrerequisiteViolated,
                     UnsolvableOrder)
from .exactalg import (LPoly, ONE, ParamJet, RatFn, ZERO, jet_substitute, mono_degree, ratfn_to_jet,
                       ratfn_truncated_zero, series_inverse, substitute)
from .family import PoissonFamily, ValidationReport, pullback
from .linalg import solve
from .multivector import ChartMap, Multivector, bracket_any, poisson_map_residual


# -- truncated Lie-theoretic helpers ---------------------------------------------

def bernoulli(n: int) -> Fraction:
    """Bernoulli number B_n with B_1 = -1/2."""
    B = [Fraction(1)]
    for m in range(1, n + 1):
        s = sum(Fraction(factorial(m + 1), factorial(k) * factorial(m + 1 - k)) * B[k] for k in range(m))
        B.append(-s / (m + 1))
    return B[n]


def _compositions(n: int, parts: int):
    if parts == 1:
        if n >= 1:
            yield (n,)
        return
    for first in range(1, n - parts + 2):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


class Truncation:
    """Truncated arithmetic on multivectors with coefficients polynomial in ``params``."""

    def __init__(self, params: Sequence[str], order: int):
        self.params = tuple(params)
        self.order = int(order)

    def cut(self, m: Multivector) -> Multivector:
        return m.truncate(self.params, self.order)

    def bracket(self, a: Multivector, b: Multivector) -> Multivector:
        if a.is_zero() or b.is_zero():
            return Multivector(a.variables, a.degree + b.degree - 1, {}, a.chart)
        return self.cut(bracket_any(a, b))

    def exp_ad(self, theta: Multivector, m: Multivector, sign: int = -1) -> Multivector:
        """``exp(sign * ad theta) m`` for ``theta`` vanishing at parameter 0."""
        total = m
        term = m
        for n in range(1, self.order + 1):
            term = self.bracket(theta, term).scale(Fraction(sign, n))
            if term.is_zero():
                break
            total = total + term
        return self.cut(total)

    def bch(self, x: Multivector, y: Multivector) -> Multivector:
        """``log(exp(x) exp(y))`` for vector fields vanishing at parameter 0."""
        zs = {1: self.cut(x + y)}
        xmy = x - y
        xpy = zs[1]
        for n in range(1, self.order):
            acc = self.bracket(xmy, zs[n]).scale(Fraction(1, 2))
            p = 1
            while 2 * p <= n:
                coeff = bernoulli(2 * p) / factorial(2 * p)
                for ks in _compositions(n, 2 * p):
                    term = xpy
                    for k in reversed(ks):
                        term = self.bracket(zs[k], term)
                        if term.is_zero():
                            break
                    if not term.is_zero():
                        acc = acc + term.scale(coeff)
                p += 1
            zs[n + 1] = acc.scale(Fraction(1, n + 1))
        total = zs[1]
        for n in range(2, self.order + 1):
            total = total + zs[n]
        return self.cut(total)


# -- Maurer-Cartan functional -------------------------------------------------------

def mc_functional(beta: TotalCochain, cx: CechComplex, params: Sequence[str], order: int) -> TotalCochain:
    """The gluing defect of ``beta`` truncated at ``order`` (a degree-2 cochain)."""
    tr = Truncation(params, order)
    n = cx.n
    lam = {}
    theta = {}
    for (I, q), m in beta.values.items():
        if q == 2 and len(I) == 1:
            lam[I[0]] = m
        elif q == 1 and len(I) == 2:
            theta[I] = m
        else:
            raise PrerequisiteViolated(f"unexpected part {(I, q)} in a degree-1 cochain")

    def lam_of(i):
        return lam.get(i, Multivector(cx.vars[i], 2, {}, cx.names[i]))

    def theta_of(I):
        return theta.get(I, Multivector(cx.vars[I[0]], 1, {}, cx.names[I[0]]))

    out: dict = {}
    if n >= 3:
        for (i,) in cx.simplices[0]:
            lj = lam_of(i)
            val = cx.bracket_lambda(i, lj) + tr.bracket(lj, lj).scale(Fraction(1, 2))
            out[((i,), 3)] = tr.cut(val)
    for I in cx.simplices.get(1, []):
        j, k = I
        l0 = cx.lam[j]
        lk = tr.cut(cx.push_to(lam_of(k), k, j))
        moved = tr.exp_ad(theta_of(I), l0 + lk, sign=-1)
        out[(I, 2)] = tr.cut(moved - l0 - lam_of(j))
    for I in cx.simplices.get(2, []):
        i, j, k = I
        th_jk = tr.cut(cx.push_to(theta_of((j, k)), j, i))
        val = tr.bch(th_jk, theta_of((i, j))) - theta_of((i, k))
        out[(I, 1)] = tr.cut(val)
    return TotalCochain(2, out)


def cup_bracket(a: TotalCochain, b: TotalCochain, cx: CechComplex) -> TotalCochain:
    """Čech-Schouten product on degree-1 cochains (the quadratic part of the functional).

    ``[a, b]`` symmetrised so that ``mc_functional(beta) = D beta + 1/2 [beta, beta] + O(beta^3)``.
    """
    def part(c, I, q):
        return c.values.get((I, q), Multivector(cx.vars[I[0]], q, {}, cx.names[I[0]]))

    out = {}
    if cx.n >= 3:
        for (i,) in cx.simplices[0]:
            out[((i,), 3)] = bracket_any(part(a, (i,), 2), part(b, (i,), 2))
    for I in cx.simplices.get(1, []):
        j, k = I
        lk_a = cx.push_to(part(a, (k,), 2), k, j)
        lk_b = cx.push_to(part(b, (k,), 2), k, j)
        # second-order terms of exp(-ad th)(L0 + lk): -[th, lk] + 1/2 [th, [th, L0]]
        ta, tb = part(a, I, 1), part(b, I, 1)
        val = -(bracket_any(ta, lk_b) + bracket_any(tb, lk_a))
        val = val + (bracket_any(ta, bracket_any(tb, cx.lam[j])) + bracket_any(tb, bracket_any(ta, cx.lam[j]))).scale(
            Fraction(1, 2))
        out[(I, 2)] = val
    for I in cx.simplices.get(2, []):
        i, j, k = I
        xa = cx.push_to(part(a, (j, k), 1), j, i)
        xb = cx.push_to(part(b, (j, k), 1), j, i)
        ya, yb = part(a, (i, j), 1), part(b, (i, j), 1)
        out[(I, 1)] = (bracket_any(xa, yb) + bracket_any(xb, ya)).scale(Fraction(1, 2))
    return TotalCochain(2, out)


# -- existence ----------------------------------------------------------------------

@dataclass
class Obstruction:
    order: int
    monomial: tuple
    weight: tuple
    coordinates: list


@dataclass
class MCSolution:
    beta: TotalCochain
    params: tuple
    order: int
    ledger: list = field(default_factory=list)   # per order: list of obstruction entries
    residual: TotalCochain | None = None
    complete: bool = True

    @property
    def ledger_clean(self) -> bool:
        return all(not entry["obstructions"] for entry in self.ledger)

    def to_dict(self, cx: CechComplex | None = None) -> dict:
        return {
            "params": list(self.params),
            "order": self.order,
            "complete": self.complete,
            "ledger": self.ledger,
            "beta": cochain_to_json(self.beta, cx),
            "residual_zero": self.residual is not None and self.residual.is_zero(),
        }


def _param_monomial_text(m) -> str:
    from .parse import format_lpoly
    return format_lpoly(LPoly.monomial(m))


def mc_defect(beta: TotalCochain, cx: CechComplex, params: Sequence[str], v: int,
              check: bool = True) -> TotalCochain:
    """Homogeneous order-``v`` part of the functional for a solution valid below ``v``."""
    F = mc_functional(beta, cx, params, v)
    lower = F.truncate(params, v - 1)
    if not lower.is_zero():
        raise PrerequisiteViolated(f"partial solution fails below order {v}")
    defect = F.homogeneous_part(params, v)
    if check and not cx.differential(defect).is_zero():
        raise AssertionError(f"order-{v} defect is not D-closed")
    return defect


def _slice_obstruction(cx: CechComplex, part: TotalCochain) -> dict:
    """H^2 coordinates of a closed degree-2 cochain, per weight."""
    labels = cx.cochain_labels(part)
    by_w: dict = {}
    for lab, val in labels.items():
        by_w.setdefault(cx.weight_of_label(lab), {})[lab] = val
    out = {}
    for w, lab_vals in sorted(by_w.items()):
        res = cx.slice_cohomology(w, part.k)
        index = {lab: i for i, lab in enumerate(res.basis)}
        target = {}
        for lab, val in lab_vals.items():
            if lab not in index:
                raise OutOfTruncation(f"defect term {lab} outside the exponent box")
            target[index[lab]] = val
        x = solve(list(res.representatives) + list(res.image), target)
        if x is None:
            raise OutOfTruncation(f"defect at weight {w} not resolved by the slice")
        coords = [x.get(i, Fraction(0)) for i in range(len(res.representatives))]
        if any(coords):
            out[w] = coords
    return out


def solve_order(defect: TotalCochain, cx: CechComplex, params: Sequence[str] = ()):
    """Return a degree-1 correction x with ``D x = -defect``, or a list of Obstructions."""
    if not cx.differential(defect).is_zero():
        raise NotACocycle("defect is not D-closed")
    ps = tuple(params)
    correction = zero_cochain(defect.k - 1)
    obstructions = []
    for pm, part in sorted(defect.split_by(ps).items()):
        x = cx.solve_exact(-part)
        if x is None:
            for w, coords in _slice_obstruction(cx, part).items():
                obstructions.append(Obstruction(mono_degree(pm, ps), pm, w, coords))
            if not obstructions:
                raise OutOfTruncation("defect neither exact nor obstructed inside the box")
            continue
        mono = LPoly.monomial(pm)
        correction = correction + x.scale(mono)
    if obstructions:
        return obstructions
    return correction


def solve_existence(cx: CechComplex, basis: Sequence[TotalCochain], order: int,
                    params: Sequence[str] | None = None) -> MCSolution:
    """Formal solution with first-order term ``sum_u t_u basis_u``."""
    m = len(basis)
    ps = tuple(params) if params is not None else tuple(f"t{u + 1}" for u in range(m))
    beta = zero_cochain(1)
    for t, b in zip(ps, basis):
        beta = beta + b.scale(LPoly.var(t))
    ledger = [{"order": 1, "obstructions": []}]
    complete = True
    for v in range(2, order + 1):
        defect = mc_defect(beta, cx, ps, v)
        step = solve_order(defect, cx, ps)
        if isinstance(step, list):
            ledger.append({"order": v, "obstructions": [
                {"monomial": _param_monomial_text(o.monomial), "weight": list(o.weight),
                 "coordinates": [str(c) for c in o.coordinates]} for o in step]})
            complete = False
            break
        ledger.append({"order": v, "obstructions": []})
        beta = beta + step
    reached = order if complete else v - 1
    residual = mc_functional(beta, cx, ps, reached)
    return MCSolution(beta, ps, reached, ledger, residual, complete)


def basis_from_report(report: CohomologyReport) -> list:
    return [c for _, c in report.basis]


# -- completeness -------------------------------------------------------------------

@dataclass
class CompletenessSolution:
    """Parameter map ``h`` (target parameter -> jet in the test parameters) and
    fiber maps ``g`` (chart -> coordinate jets), valid through ``order``."""
    h: dict
    g: dict
    target_params: tuple
    test_params: tuple
    order: int
    gauge_dim: int = 0
    diagnostics: list = field(default_factory=list)

    def h_jet(self, param: str) -> ParamJet:
        return ParamJet.from_lpoly(self.h[param], self.test_params, self.order)

    def chart_map(self, chart: str, variables: Sequence[str], constants: Sequence[str] = ()) -> ChartMap:
        comps = tuple(RatFn(c) for c in self.g[chart])
        return ChartMap(chart, chart, variables, variables, comps, None,
                        tuple(self.test_params) + tuple(constants))

    def truncated(self, order: int) -> "CompletenessSolution":
        ps = self.test_params
        return CompletenessSolution(
            {p: e.truncate(ps, order) for p, e in self.h.items()},
            {c: tuple(e.truncate(ps, order) for e in comps) for c, comps in self.g.items()},
            self.target_params, ps, order, self.gauge_dim, self.diagnostics[:order])

    def to_dict(self) -> dict:
        from .parse import format_lpoly
        return {
            "order": self.order,
            "target_params": list(self.target_params),
            "test_params": list(self.test_params),
            "h": {p: format_lpoly(self.h[p]) for p in self.target_params},
            "g": {c: [format_lpoly(e) for e in comps] for c, comps in sorted(self.g.items())},
            "gauge_dim": self.gauge_dim,
            "diagnostics": self.diagnostics,
        }


def seed_solution(target: PoissonFamily, test: PoissonFamily) -> CompletenessSolution:
    """``h = 0`` and ``g_j = identity``."""
    g = {c.name: tuple(LPoly.var(v) for v in c.variables) for c in test.atlas.charts}
    return CompletenessSolution({p: ZERO for p in target.params}, g, target.params, test.params, 0)


def _jet_of_ratfn(r: RatFn, assignment: dict, params, order: int, keep) -> LPoly:
    num = jet_substitute(r.num, assignment, params, order, keep)
    if r.den == ONE:
        return num
    den = jet_substitute(r.den, assignment, params, order, keep)
    return (num * series_inverse(den, params, order)).truncate(params, order)


def _gluing_gap(target: PoissonFamily, test: PoissonFamily, sol: CompletenessSolution,
                a: str, b: str, order: int) -> list:
    """``g_jk(g_k, h) - g_j(f_jk)`` per target coordinate, as jets in chart-b variables."""
    ps = test.params
    keep = test.atlas.constants
    G = target.atlas.transition(a, b)
    F = test.atlas.transition(a, b)
    zb = target.atlas.chart(b).variables
    za = target.atlas.chart(a).variables
    assign = dict(zip(zb, sol.g[b]))
    assign.update({t: sol.h.get(t, ZERO) for t in target.params})
    lhs = [_jet_of_ratfn(c, assign, ps, order, keep) for c in G.components]
    f_jets = {v: ratfn_to_jet(c, ps, order) for v, c in zip(za, F.components)}
    rhs = [jet_substitute(c, f_jets, ps, order, keep) for c in sol.g[a]]
    return [x - y for x, y in zip(lhs, rhs)]


def _poisson_gap(target: PoissonFamily, test: PoissonFamily, sol: CompletenessSolution,
                 chart: str, order: int) -> dict:
    """``Lambda_M(g_j, h) - (g_j)_* Lambda_N`` per component, as jets in chart variables."""
    ps = test.params
    keep = test.atlas.constants
    z = target.atlas.chart(chart).variables
    g = sol.g[chart]
    assign = dict(zip(z, g))
    assign.update({t: sol.h.get(t, ZERO) for t in target.params})
    lam_m = target.bivectors[chart]
    lam_n = test.bivectors[chart]
    jac = [[e.diff(v) for v in z] for e in g]
    out = {}
    for J in combinations(range(len(z)), 2):
        r, s = J
        lhs = jet_substitute(lam_m.comps.get(J, ZERO), assign, ps, order, keep + z)
        rhs = ZERO
        for (al, be), c in lam_n.comps.items():
            rhs = rhs + c * (jac[r][al] * jac[s][be] - jac[r][be] * jac[s][al])
        out[J] = (lhs - rhs).truncate(ps, order)
    return out


def completeness_defect(target: PoissonFamily, test: PoissonFamily, partial: CompletenessSolution,
                        v: int, cx: CechComplex | None = None, check: bool = True) -> TotalCochain:
    """Order-``v`` disagreement of a partial solution, as a degree-1 cochain of the target complex.

    The chart parts hold the bivector gap and the overlap parts the gluing
    gap re-expressed in the leading chart of each overlap.
    """
    cx = cx or _central_complex(target)
    ps = test.params
    keep = test.atlas.constants
    names = cx.names
    vals = {}
    for (i,) in cx.simplices[0]:
        gap = _poisson_gap(target, test, partial, names[i], v)
        comps = {}
        for J, e in gap.items():
            if not e.truncate(ps, v - 1).is_zero():
                raise PrerequisiteViolated(f"bivector congruence fails below order {v} on {names[i]}")
            part = e.homogeneous_part(ps, v)
            if not part.is_zero():
                comps[J] = part
        vals[((i,), 2)] = Multivector(cx.vars[i], 2, comps, names[i])
    for I in cx.simplices.get(1, []):
        i, j = I
        a, b = names[i], names[j]
        gap = _gluing_gap(target, test, partial, a, b, v)
        back = cx.atlas.transition(b, a)
        central_back = dict(zip(back.target_vars, back.components))
        comps = {}
        for alpha, e in enumerate(gap):
            if not e.truncate(ps, v - 1).is_zero():
                raise PrerequisiteViolated(f"gluing congruence fails below order {v} on {a},{b}")
            part = e.homogeneous_part(ps, v)
            if part.is_zero():
                continue
            moved = substitute(part, central_back, passthrough=cx.vars[i] + ps + keep).to_lpoly()
            comps[(alpha,)] = moved
        vals[(I, 1)] = Multivector(cx.vars[i], 1, comps, names[i])
    defect = TotalCochain(1, vals)
    if check and not cx.differential(defect).is_zero():
        raise AssertionError(f"order-{v} completeness defect is not D-closed")
    return defect


def _central_complex(fam: PoissonFamily, box: int = 8, window=(-4, 4)) -> CechComplex:
    return CechComplex(fam.central_atlas(), fam.central_bivectors(), box, window)


def check_same_central_fiber(target: PoissonFamily, test: PoissonFamily) -> None:
    ta, sa = target.central_atlas(), test.central_atlas()
    if [(c.name, c.variables) for c in ta.charts] != [(c.name, c.variables) for c in sa.charts]:
        raise ChartMismatch("target and test families use different charts")
    if set(ta.maps) != set(sa.maps):
        raise ChartMismatch("target and test families have different overlaps")
    for key, f in ta.maps.items():
        if list(f.components) != list(sa.maps[key].components):
            raise ChartMismatch(f"central transitions differ on {key[1]}->{key[0]}")
    tb, sb = target.central_bivectors(), test.central_bivectors()
    for c in ta.names:
        if tb[c] != sb[c]:
            raise ChartMismatch(f"central bivectors differ on {c}")


def complete_family(target: PoissonFamily, test: PoissonFamily, order: int,
                    report: CohomologyReport | None = None, box: int = 8,
                    window=(-4, 4)) -> CompletenessSolution:
    """Solve for ``h`` and ``g`` order by order so that the test family is induced from the target."""
    from .deformation import infinitesimal_cocycle, ks_matrix
    check_same_central_fiber(target, test)
    if report is None:
        cx = _central_complex(target, box, window)
        report = _run_slices(cx, 1)
    cx = report.complex
    ks = ks_matrix(target, report)
    if ks.rank < len(report.basis):
        raise NotSurjective(f"Kodaira-Spencer rank {ks.rank} is below dim H^1 = {len(report.basis)}")
    gauge = _run_slices(cx, 0).total
    ks_cochains = [infinitesimal_cocycle(target, p).to_cochain(cx) for p in target.params]
    columns = [{r: x for r, x in enumerate(col) if x} for col in ks.columns]
    ps = test.params
    sol = seed_solution(target, test)
    sol.gauge_dim = gauge
    for v in range(1, order + 1):
        defect = completeness_defect(target, test, sol, v, cx)
        h = dict(sol.h)
        g = {c: list(e) for c, e in sol.g.items()}
        entries = []
        for pm, part in sorted(defect.split_by(ps).items()):
            coords = project_to_basis(part, report)
            x = solve(columns, {r: -c for r, c in enumerate(coords) if c})
            if x is None:
                raise UnsolvableOrder(f"order {v}: defect class outside the Kodaira-Spencer image",
                                      cochain_to_json(part, cx))
            rhs = part
            for u, cu in x.items():
                rhs = rhs + ks_cochains[u].scale(cu)
            shift = cx.solve_exact(rhs)
            if shift is None:
                raise UnsolvableOrder(f"order {v}: no fiber correction solves the linear system",
                                      cochain_to_json(rhs, cx))
            mono = LPoly.monomial(pm)
            for u, cu in x.items():
                t = target.params[u]
                h[t] = h[t] + mono * LPoly.const(cu)
            for (I, q), m in shift.values.items():
                name = cx.names[I[0]]
                for (alpha,), c in m.comps.items():
                    g[name][alpha] = g[name][alpha] + c * mono
            entries.append({"monomial": _param_monomial_text(pm),
                            "h": {target.params[u]: str(cu) for u, cu in sorted(x.items())}})
        sol = CompletenessSolution(h, {c: tuple(e) for c, e in g.items()}, target.params, ps, v,
                                   gauge, sol.diagnostics + [{"order": v, "terms": entries}])
    if order >= 1:
        rep = verify_congruences(target, test, sol, order)
        if not rep.ok:
            raise UnsolvableOrder("final solution fails its congruences", rep.to_dict())
    return sol


def verify_congruences(target: PoissonFamily, test: PoissonFamily, sol: CompletenessSolution,
                       order: int) -> ValidationReport:
    """Check both congruences with exact rational functions against the pulled-back target."""
    ps = test.params
    induced = pullback(target, sol.h, ps, order)
    keep = test.atlas.constants
    rep = ValidationReport()
    for c in test.atlas.charts:
        gmap = sol.chart_map(c.name, c.variables, keep)
        res = poisson_map_residual(gmap, test.bivectors[c.name], induced.bivectors[c.name])
        bad = [k for k, r in res.items() if not ratfn_truncated_zero(r, ps, order)]
        rep.add(f"bivector congruence on {c.name}", not bad, str(bad) if bad else None)
    for (a, b) in sorted(test.atlas.maps):
        if a == b:
            continue
        ga = sol.chart_map(a, test.atlas.chart(a).variables, keep)
        gb = sol.chart_map(b, test.atlas.chart(b).variables, keep)
        left = ga.compose(test.atlas.transition(a, b))
        right = induced.atlas.transition(a, b).compose(gb)
        bad = [k for k, (x, y) in enumerate(zip(left.components, right.components))
               if not ratfn_truncated_zero(x - y, ps, order)]
        rep.add(f"gluing congruence {b}->{a}", not bad, str(bad) if bad else None)
    return rep
