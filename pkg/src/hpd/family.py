"""Poisson families in atlas and quotient presentations, validators, and example builders."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .errors import InvalidParams, MissingInverse
from .exactalg import LPoly, ONE, RatFn, ZERO, ratfn_truncated_zero, substitute
from .multivector import (ChartMap, Multivector, jacobi_defect, poisson_map_residual,
                          pushforward)
from .parse import format_lpoly, format_ratfn, parse_polynomial


@dataclass(frozen=True)
class Chart:
    name: str
    variables: tuple

    @property
    def dim(self) -> int:
        return len(self.variables)


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: str | None = None

    def to_dict(self) -> dict:
        return {"check": self.name, "passed": self.passed, "residual": self.residual}


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list:
        """Names of the failed checks."""
        return [c.name for c in self.checks if not c.passed]

    def add(self, name: str, residual_zero: bool, residual=None):
        text = None
        if not residual_zero and residual is not None:
            text = residual if isinstance(residual, str) else str(residual)
        self.checks.append(CheckResult(name, residual_zero, text))

    def extend(self, other: "ValidationReport"):
        self.checks.extend(other.checks)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


def _is_zero(r, params, order) -> bool:
    if order is None:
        return r.is_zero()
    return ratfn_truncated_zero(RatFn.of(r), params, order)


# -- atlas --------------------------------------------------------------------

class Atlas:
    """Charts plus transition maps ``maps[(j, k)]`` sending chart-k to chart-j coordinates."""

    def __init__(self, charts: Sequence[Chart], transitions: Iterable[ChartMap] = (),
                 triples: Iterable[Sequence[str]] | None = None, params: Sequence[str] = (),
                 constants: Sequence[str] = ()):
        self.charts = list(charts)
        self.params = tuple(params)
        self.constants = tuple(constants)
        self._by_name = {c.name: c for c in self.charts}
        self.maps: dict = {}
        syms = self.params + self.constants
        for f in transitions:
            extra = tuple(x for x in syms if x not in f.params)
            if extra:
                f = ChartMap(f.source, f.target, f.source_vars, f.target_vars, f.components, f.inverse,
                             f.params + extra)
            self.maps[(f.target, f.source)] = f
            if f.inverse is not None and (f.source, f.target) not in self.maps:
                self.maps[(f.source, f.target)] = f.inverted()
        if triples is None:
            names = [c.name for c in self.charts]
            triples = [t for t in combinations(names, 3)
                       if all((a, b) in self.maps for a, b in combinations(t, 2))]
        self.triples = [tuple(t) for t in triples]

    def chart(self, name: str) -> Chart:
        return self._by_name[name]

    def index(self, name: str) -> int:
        return [c.name for c in self.charts].index(name)

    @property
    def names(self) -> list:
        return [c.name for c in self.charts]

    def transition(self, target: str, source: str) -> ChartMap:
        """Map from chart ``source`` coordinates to chart ``target`` coordinates."""
        try:
            return self.maps[(target, source)]
        except KeyError:
            raise MissingInverse(f"no transition from {source} to {target}") from None

    def has_overlap(self, a: str, b: str) -> bool:
        return (a, b) in self.maps

    def overlap_pairs(self) -> list:
        """Unordered overlapping chart pairs in chart order."""
        names = self.names
        return [(a, b) for a, b in combinations(names, 2) if (a, b) in self.maps]

    @property
    def symbols(self) -> tuple:
        return self.params + self.constants

    def set_params(self, values: Mapping[str, object], new_params: Sequence[str] = ()) -> "Atlas":
        new_params = tuple(new_params)
        maps = []
        for (j, k), f in sorted(self.maps.items()):
            if (k, j) in self.maps and self.names.index(k) < self.names.index(j):
                continue
            maps.append(_substitute_map(f, values, new_params, self.constants))
        remaining = tuple(p for p in self.params if p not in values) + new_params
        return Atlas(self.charts, maps, self.triples, remaining, self.constants)

    def central(self) -> "Atlas":
        return self.set_params({p: 0 for p in self.params})

    def reordered(self, names: Sequence[str]) -> "Atlas":
        charts = [self.chart(n) for n in names]
        maps = [self.maps[(j, k)] for (j, k) in self.maps]
        return Atlas(charts, maps, None, self.params, self.constants)


def _substitute_map(f: ChartMap, values: Mapping[str, object], new_params, constants) -> ChartMap:
    vals = {k: RatFn.of(v) for k, v in values.items()}
    keep = tuple(p for p in f.params if p not in vals) + tuple(new_params) + tuple(constants)
    comps = tuple(substitute(c, vals, passthrough=f.source_vars + keep) for c in f.components)
    inv = None
    if f.inverse is not None:
        inv = tuple(substitute(c, vals, passthrough=f.target_vars + keep) for c in f.inverse)
    return ChartMap(f.source, f.target, f.source_vars, f.target_vars, comps, inv, keep)


def _identity_residuals(f: ChartMap, g: ChartMap) -> list:
    """Residuals of g o f - id on the source variables of f."""
    comp = g.compose(f)
    return [c - RatFn(LPoly.var(v)) for c, v in zip(comp.components, f.source_vars)]


def validate_atlas(atlas: Atlas, order: int | None = None) -> ValidationReport:
    """Check inverse round trips on every overlap and the cocycle law on every triple."""
    rep = ValidationReport()
    ps = atlas.params
    for a, b in atlas.overlap_pairs():
        f_ab = atlas.transition(a, b)
        f_ba = atlas.transition(b, a)
        for label, first, second in ((f"{b}->{a}->{b}", f_ab, f_ba), (f"{a}->{b}->{a}", f_ba, f_ab)):
            res = _identity_residuals(first, second)
            bad = [r for r in res if not _is_zero(r, ps, order)]
            rep.add(f"inverse {label}", not bad, "; ".join(format_ratfn(r) for r in bad) if bad else None)
    for i, j, k in atlas.triples:
        f_ik = atlas.transition(i, k)
        comp = atlas.transition(i, j).compose(atlas.transition(j, k))
        res = [x - y for x, y in zip(comp.components, f_ik.components)]
        bad = [r for r in res if not _is_zero(r, ps, order)]
        rep.add(f"cocycle {i},{j},{k}", not bad, "; ".join(format_ratfn(r) for r in bad) if bad else None)
    return rep


# -- atlas families -----------------------------------------------------------

@dataclass
class PoissonFamily:
    atlas: Atlas
    bivectors: dict
    order: int = 3
    name: str = ""

    @property
    def params(self) -> tuple:
        return self.atlas.params

    @property
    def param_count(self) -> int:
        return len(self.atlas.params)

    def central_atlas(self) -> Atlas:
        return self.atlas.central()

    def central_bivectors(self) -> dict:
        return {c: b.set_zero(self.params) for c, b in self.bivectors.items()}

    def reference_chart(self) -> str:
        return self.atlas.charts[0].name


def validate_family(fam: PoissonFamily, order: int | None = None) -> ValidationReport:
    V = fam.order if order is None else order
    ps = fam.params
    rep = validate_atlas(fam.atlas, V)
    for c in fam.atlas.names:
        biv = fam.bivectors[c]
        defect = jacobi_defect(biv)
        bad = {t: d.truncate(ps, V) for t, d in defect.items() if not d.truncate(ps, V).is_zero()}
        rep.add(f"jacobi {c}", not bad,
                "; ".join(f"{t}: {format_lpoly(d)}" for t, d in sorted(bad.items())) if bad else None)
    for a, b in sorted(fam.atlas.maps):
        f = fam.atlas.transition(a, b)
        res = poisson_map_residual(f, fam.bivectors[b], fam.bivectors[a])
        bad = {k: r for k, r in res.items() if not _is_zero(r, ps, V)}
        rep.add(f"poisson map {b}->{a}", not bad,
                "; ".join(f"{k}: {format_ratfn(r)}" for k, r in sorted(bad.items())) if bad else None)
    return rep


def pullback(fam: PoissonFamily, h: Mapping[str, LPoly], new_params: Sequence[str],
             order: int | None = None, name: str = "") -> PoissonFamily:
    """Family over the new parameters obtained by substituting ``t = h(s)``."""
    V = fam.order if order is None else order
    new_params = tuple(new_params)
    values = {p: h.get(p, ZERO) for p in fam.params}
    atlas = fam.atlas.set_params(values, new_params)
    keep = new_params + fam.atlas.constants
    bivs = {}
    for c, b in fam.bivectors.items():
        chart_vars = b.variables
        bivs[c] = b.map_coeffs(
            lambda p: substitute(p, values, passthrough=chart_vars + keep).to_lpoly().truncate(new_params, V))
    return PoissonFamily(atlas, bivs, V, name or f"{fam.name}-pullback")


def recenter(fam: PoissonFamily, point: Mapping[str, object]) -> PoissonFamily:
    """Substitute t -> t0 + t so that the fiber over t0 becomes the central fiber."""
    h = {}
    for p in fam.params:
        shift = point.get(p, 0)
        h[p] = LPoly.var(p) + (shift if isinstance(shift, LPoly) else LPoly.const(shift))
    return pullback(fam, h, fam.params, fam.order, f"{fam.name}-recentered")


def recoordinatize(fam: PoissonFamily, chart: str, new_vars: Sequence[str],
                   old_in_new: Sequence, new_in_old: Sequence) -> PoissonFamily:
    """Replace the coordinates of one chart via an invertible (parameter-dependent) change.

    ``old_in_new`` expresses the old coordinates through the new ones and
    ``new_in_old`` is its inverse.
    """
    atlas = fam.atlas
    old = atlas.chart(chart)
    syms = atlas.symbols
    phi = ChartMap(chart, chart, tuple(new_vars), old.variables, old_in_new, new_in_old, syms)
    charts = [Chart(c.name, tuple(new_vars)) if c.name == chart else c for c in atlas.charts]
    maps = []
    for (j, k), f in atlas.maps.items():
        if j == chart and k == chart:
            continue
        if k == chart:
            maps.append(_retarget(f.compose(phi), chart, j))
        elif j == chart:
            maps.append(_retarget(phi.inverted().compose(f), k, chart))
        else:
            maps.append(f)
    new_atlas = Atlas(charts, maps, atlas.triples, atlas.params, atlas.constants)
    bivs = dict(fam.bivectors)
    bivs[chart] = pushforward(fam.bivectors[chart], phi.inverted(), fam.params, fam.order)
    return PoissonFamily(new_atlas, bivs, fam.order, f"{fam.name}-recoordinatized")


def _retarget(f: ChartMap, source: str, target: str) -> ChartMap:
    return ChartMap(source, target, f.source_vars, f.target_vars, f.components, f.inverse, f.params)


# -- quotient families --------------------------------------------------------

@dataclass
class QuotientFamily:
    chart: Chart
    generators: list
    bivector: Multivector
    params: tuple = ()
    constants: tuple = ()
    relations: dict = field(default_factory=dict)
    order: int = 3
    name: str = ""


def _apply_relations(fam: QuotientFamily):
    rel = {k: RatFn.of(v) for k, v in fam.relations.items()}
    if not rel:
        return fam.generators, fam.bivector
    syms = tuple(fam.chart.variables) + tuple(fam.params) + tuple(s for s in fam.constants if s not in rel)
    gens = []
    for name, g in fam.generators:
        comps = tuple(substitute(c, rel, passthrough=syms) for c in g.components)
        inv = None
        if g.inverse is not None:
            inv = tuple(substitute(c, rel, passthrough=syms) for c in g.inverse)
        gens.append((name, ChartMap(g.source, g.target, g.source_vars, g.target_vars, comps, inv, g.params)))
    biv = fam.bivector.map_coeffs(lambda p: substitute(p, rel, passthrough=syms).to_lpoly())
    return gens, biv


def invariance_residual(fam: QuotientFamily, generator: int = 0) -> dict:
    gens, biv = _apply_relations(fam)
    return poisson_map_residual(gens[generator][1], biv, biv)


def validate_quotient(fam: QuotientFamily, order: int | None = None) -> ValidationReport:
    V = fam.order if order is None else order
    ps = fam.params
    rep = ValidationReport()
    gens, biv = _apply_relations(fam)
    defect = jacobi_defect(biv)
    bad = {t: d for t, d in defect.items() if not d.truncate(ps, V).is_zero()}
    rep.add("jacobi", not bad, "; ".join(f"{t}: {format_lpoly(d)}" for t, d in sorted(bad.items())) if bad else None)
    for name, g in gens:
        res = poisson_map_residual(g, biv, biv)
        bad = {k: r for k, r in res.items() if not _is_zero(r, ps, V)}
        rep.add(f"invariance {name}", not bad,
                "; ".join(f"{k}: {format_ratfn(r)}" for k, r in sorted(bad.items())) if bad else None)
        if g.inverse is not None:
            res = _identity_residuals(g, g.inverted())
            badi = [r for r in res if not _is_zero(r, ps, V)]
            rep.add(f"inverse {name}", not badi, "; ".join(format_ratfn(r) for r in badi) if badi else None)
    return rep


# -- example builders ---------------------------------------------------------

P2_NAMES = (("x", "w"), ("x1", "w1"), ("x2", "w2"))


def projective_atlas(n: int, names: Sequence[Sequence[str]] | None = None) -> Atlas:
    """Standard affine cover of P^n; chart i has coordinates Z_a/Z_i for a != i."""
    if names is None:
        names = P2_NAMES if n == 2 else tuple(tuple(f"u{i}{a}" for a in range(n + 1) if a != i)
                                              for i in range(n + 1))
    charts = [Chart(f"U{i}", tuple(names[i])) for i in range(n + 1)]

    def ratio(chart: int, a: int) -> RatFn:
        # Z_a / Z_chart in chart coordinates
        if a == chart:
            return RatFn(ONE)
        others = [b for b in range(n + 1) if b != chart]
        return RatFn(LPoly.var(names[chart][others.index(a)]))

    maps = []
    for j, k in combinations(range(n + 1), 2):
        # chart-j coordinate Z_a/Z_j = (Z_a/Z_k) / (Z_j/Z_k)
        fwd = tuple(ratio(k, a) / ratio(k, j) for a in range(n + 1) if a != j)
        bwd = tuple(ratio(j, a) / ratio(j, k) for a in range(n + 1) if a != k)
        maps.append(ChartMap(f"U{k}", f"U{j}", charts[k].variables, charts[j].variables, fwd, bwd))
    return Atlas(charts, maps)


def affine_atlas(variables: Sequence[str], name: str = "A") -> Atlas:
    return Atlas([Chart(name, tuple(variables))], [])


def spread_bivector(atlas: Atlas, biv: Multivector, params: Sequence[str] = (),
                    order: int | None = None) -> dict:
    """Express a bivector given on the first chart on every chart by pushforward."""
    ref = atlas.charts[0].name
    out = {ref: Multivector(biv.variables, biv.degree, biv.comps, ref)}
    for c in atlas.charts[1:]:
        out[c.name] = pushforward(out[ref], atlas.transition(c.name, ref), params, order)
    return out


P2_CUBIC5 = ("w^2", "x^3", "x^2*w", "x*w^2", "w^3")
P2_FULL10 = ("1", "x", "w", "x^2", "x*w", "w^2", "x^3", "x^2*w", "x*w^2", "w^3")


def _p2(params: dict) -> PoissonFamily:
    family = params.get("family", "cubic5")
    if family == "cubic5":
        monos = P2_CUBIC5
        base = params.get("base", "x")
    elif family == "full10":
        monos = P2_FULL10
        base = params.get("base", "0")
    else:
        monos = tuple(params.get("monomials", ()))
        base = params.get("base", "x")
        if not monos:
            raise InvalidParams(f"unknown p2 family {family!r}")
    order = int(params.get("order", 3))
    names = tuple(f"t{i + 1}" for i in range(len(monos)))
    coeff = parse_polynomial(base)
    for t, m in zip(names, monos):
        coeff = coeff + LPoly.var(t) * parse_polynomial(m)
    for v in coeff.variables() - set(names) - {"x", "w"}:
        raise InvalidParams(f"unexpected symbol {v!r} in the p2 bivector")
    atlas = projective_atlas(2)
    atlas = Atlas(atlas.charts, [atlas.maps[k] for k in sorted(atlas.maps)], atlas.triples, names)
    biv = Multivector(("x", "w"), 2, {(0, 1): coeff}, "U0")
    return PoissonFamily(atlas, spread_bivector(atlas, biv, names), order, f"p2-{family}")


def _hirzebruch(params: dict) -> PoissonFamily:
    m = int(params.get("m", 2))
    k = int(params.get("k", 1))
    if not (m - 2 <= 2 * k <= m) or m < 0 or k < 0:
        raise InvalidParams(f"need m-2 <= 2k <= m, got m={m}, k={k}")
    order = int(params.get("order", 3))
    g = parse_polynomial(params.get("g", "t"))
    t = LPoly.var("t")
    u, v = LPoly.var("u"), LPoly.var("v")
    x, y, w, z = (LPoly.var(s) for s in "xywz")
    R = RatFn.of
    A = Chart("A", ("u", "x"))
    B = Chart("B", ("u", "y"))
    C = Chart("C", ("v", "w"))
    D = Chart("D", ("v", "z"))
    ps = ("t",)
    x_of_vw = R(v ** m * w + t * v ** k)
    w_of_ux = R(u ** m * x - t * u ** (m - k))
    maps = [
        ChartMap("A", "B", A.variables, B.variables, (R(u), R(ONE) / R(x)), (R(u), R(ONE) / R(y)), ps),
        ChartMap("C", "D", C.variables, D.variables, (R(v), R(ONE) / R(w)), (R(v), R(ONE) / R(z)), ps),
        ChartMap("C", "A", C.variables, A.variables, (R(ONE) / R(v), x_of_vw), (R(ONE) / R(u), w_of_ux), ps),
        ChartMap("D", "A", D.variables, A.variables,
                 (R(ONE) / R(v), R(v ** m + t * v ** k * z) / R(z)),
                 (R(ONE) / R(u), R(ONE) / w_of_ux), ps),
        ChartMap("C", "B", C.variables, B.variables,
                 (R(ONE) / R(v), R(ONE) / x_of_vw),
                 (R(ONE) / R(u), R(u ** m - t * u ** (m - k) * y) / R(y)), ps),
        ChartMap("D", "B", D.variables, B.variables,
                 (R(ONE) / R(v), R(z) / R(v ** m + t * v ** k * z)),
                 (R(ONE) / R(u), R(y) / R(u ** m - t * u ** (m - k) * y)), ps),
    ]
    atlas = Atlas([A, B, C, D], maps, None, ps)
    e = 2 * k - m + 2
    bivs = {
        "A": Multivector(A.variables, 2, {(0, 1): g * x ** 2}, "A"),
        "B": Multivector(B.variables, 2, {(0, 1): -g}, "B"),
        "C": Multivector(C.variables, 2, {(0, 1): -g * v ** e * (w * v ** (m - k) + t) ** 2}, "C"),
        "D": Multivector(D.variables, 2, {(0, 1): g * v ** e * (v ** (m - k) + t * z) ** 2}, "D"),
    }
    return PoissonFamily(atlas, bivs, order, f"hirzebruch-nagata-m{m}-k{k}")


def _hopf(params: dict) -> QuotientFamily:
    m = int(params.get("m", 2))
    if m < 1:
        raise InvalidParams("Hopf example needs m >= 1")
    order = int(params.get("order", 3))
    f = parse_polynomial(params.get("f", "t"))
    z1, z2 = LPoly.var("z1"), LPoly.var("z2")
    a, b, t = LPoly.var("a"), LPoly.var("b"), LPoly.var("t")
    chart = Chart("H", ("z1", "z2"))
    gen = ChartMap("H", "H", chart.variables, chart.variables,
                   (a * z1 + t * z2 ** m, b * z2),
                   ((z1 - t * (z2 * b ** -1) ** m) * a ** -1, z2 * b ** -1), ("t", "a", "b"))
    biv = Multivector(chart.variables, 2, {(0, 1): f * z2 ** (m + 1)}, "H")
    relations = {"a": b ** m} if params.get("relation", True) else {}
    return QuotientFamily(chart, [("g", gen)], biv, ("t",), ("a", "b"), relations, order, f"hopf-m{m}")


def hopf_iterate(n: int, m: int = 2) -> ChartMap:
    """The n-th power of the Hopf generator in closed form, valid once ``a = b^m`` is imposed."""
    z1, z2 = LPoly.var("z1"), LPoly.var("z2")
    a, b, t = LPoly.var("a"), LPoly.var("b"), LPoly.var("t")
    fwd = (a ** n * z1 + n * a ** (n - 1) * t * z2 ** m, b ** n * z2)
    z2_back = z2 * b ** -n
    bwd = ((z1 - n * a ** (n - 1) * t * z2_back ** m) * a ** -n, z2_back)
    return ChartMap("H", "H", ("z1", "z2"), ("z1", "z2"), fwd, bwd, ("t", "a", "b"))


def _torus(params: dict) -> QuotientFamily:
    n = int(params.get("n", 2))
    if n < 1:
        raise InvalidParams("torus needs n >= 1")
    order = int(params.get("order", 3))
    zs = tuple(f"z{i + 1}" for i in range(n))
    svars = tuple(f"s{i + 1}{j + 1}" for i in range(n) for j in range(n))
    chart = Chart("T", zs)
    gens = []
    for j in range(2 * n):
        shift = []
        for i in range(n):
            if j < n:
                shift.append(LPoly.const(1 if i == j else 0))
            else:
                shift.append(LPoly.var(f"s{i + 1}{j - n + 1}"))
        fwd = tuple(LPoly.var(z) + s for z, s in zip(zs, shift))
        bwd = tuple(LPoly.var(z) - s for z, s in zip(zs, shift))
        gens.append((f"omega{j + 1}", ChartMap("T", "T", zs, zs, fwd, bwd, svars)))
    coeffs = params.get("coefficients")
    comps = {}
    for i, j in combinations(range(n), 2):
        key = f"{i + 1}{j + 1}"
        if coeffs and key in coeffs:
            comps[(i, j)] = parse_polynomial(coeffs[key])
        else:
            comps[(i, j)] = LPoly.const(1) + LPoly.var(f"s{i + 1}{j + 1}")
    biv = Multivector(zs, 2, comps, "T")
    for c in comps.values():
        if c.variables() & set(zs):
            raise InvalidParams("torus bivector coefficients must not depend on z")
    return QuotientFamily(chart, gens, biv, svars, (), {}, order, f"torus-n{n}")


_BUILDERS = {"torus": _torus, "hopf": _hopf, "hirzebruch_nagata": _hirzebruch, "p2": _p2}


def build_example(kind: str, **params):
    """Construct one of the bundled example families."""
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise InvalidParams(f"unknown example kind {kind!r}") from None
    return builder(params)
