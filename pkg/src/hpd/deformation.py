"""Infinitesimal deformation cocycles and the Kodaira-Spencer matrix."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .cech import CechComplex, CohomologyReport, TotalCochain, project_to_basis
from .errors import InvalidParams
from .exactalg import LPoly, RatFn, substitute
from .family import PoissonFamily, ValidationReport
from .linalg import rank
from .multivector import Multivector
from .parse import format_multivector


@dataclass
class InfCocycle:
    lam: dict    # chart name -> bivector
    theta: dict  # (j, k) with j before k -> vector field on chart j
    direction: tuple
    charts: tuple

    def to_cochain(self, cx: CechComplex) -> TotalCochain:
        vals = {}
        for name, m in self.lam.items():
            i = cx.names.index(name)
            vals[((i,), 2)] = m
        for (a, b), m in self.theta.items():
            i, j = cx.names.index(a), cx.names.index(b)
            if i < j:
                vals[((i, j), 1)] = m
            else:
                # alternating convention, re-expressed in the new leading chart
                vals[((j, i), 1)] = -cx.push_to(m, i, j)
        return TotalCochain(1, vals)

    def to_dict(self) -> dict:
        return {
            "direction": [str(c) for c in self.direction],
            "lambda": {c: format_multivector(m) for c, m in sorted(self.lam.items())},
            "theta": [{"pair": list(p), "expr": format_multivector(m)} for p, m in sorted(self.theta.items())],
        }


def _direction_vector(fam: PoissonFamily, direction) -> tuple:
    if isinstance(direction, str):
        direction = [1 if p == direction else 0 for p in fam.params]
    direction = tuple(Fraction(c) for c in direction)
    if len(direction) != fam.param_count:
        raise InvalidParams(f"direction has {len(direction)} entries, family has {fam.param_count} parameters")
    return direction


def infinitesimal_cocycle(fam: PoissonFamily, direction) -> InfCocycle:
    """Derivative of the family at t = 0 along ``direction``, as a Čech 1-cochain."""
    c = _direction_vector(fam, direction)
    ps = fam.params
    zero = {p: 0 for p in ps}
    atlas = fam.atlas
    keep = atlas.constants
    lam = {}
    for name in atlas.names:
        biv = fam.bivectors[name]
        total = Multivector(biv.variables, 2, {}, name)
        for cu, p in zip(c, ps):
            if cu:
                total = total + biv.diff_param(p).set_zero(ps).scale(cu)
        lam[name] = total
    theta = {}
    for a, b in atlas.overlap_pairs():
        f = atlas.transition(a, b)  # chart-b coordinates -> chart-a coordinates
        back = atlas.transition(b, a)
        central_back = {v: substitute(e, zero, passthrough=atlas.chart(a).variables + keep)
                        for v, e in zip(back.target_vars, back.components)}
        comps = {}
        for alpha, comp in enumerate(f.components):
            d = RatFn(LPoly())
            for cu, p in zip(c, ps):
                if cu:
                    d = d + comp.diff(p) * RatFn(LPoly.const(cu))
            if d.is_zero():
                continue
            d0 = substitute(d, zero, passthrough=f.source_vars + keep)
            comps[(alpha,)] = substitute(d0, central_back, passthrough=keep).to_lpoly()
        theta[(a, b)] = Multivector(atlas.chart(a).variables, 1, comps, a)
    return InfCocycle(lam, theta, c, tuple(atlas.names))


def verify_cocycle_identities(c: InfCocycle, fam_or_cx) -> ValidationReport:
    """Check [L0, l_j] = 0, l_k - l_j + [L0, th_jk] = 0 and th_jk - th_ik + th_ij = 0."""
    cx = fam_or_cx if isinstance(fam_or_cx, CechComplex) else _central_complex(fam_or_cx)
    rep = ValidationReport()
    names = cx.names
    for name, lj in sorted(c.lam.items(), key=lambda kv: names.index(kv[0])):
        i = names.index(name)
        res = cx.bracket_lambda(i, lj)
        rep.add(f"[L0, lambda] on {name}", res.is_zero(), format_multivector(res))
    theta = {}
    for (a, b), m in c.theta.items():
        i, j = names.index(a), names.index(b)
        theta[(i, j)] = m
    for (i, j), th in sorted(theta.items()):
        lk = cx.push_to(c.lam[names[j]], j, i)
        res = lk - c.lam[names[i]] + cx.bracket_lambda(i, th)
        rep.add(f"lambda/theta on {names[i]},{names[j]}", res.is_zero(), format_multivector(res))
    for I in cx.simplices.get(2, []):
        i, j, k = I
        if not all(p in theta for p in ((i, j), (j, k), (i, k))):
            continue
        res = cx.push_to(theta[(j, k)], j, i) - theta[(i, k)] + theta[(i, j)]
        rep.add(f"theta cocycle on {names[i]},{names[j]},{names[k]}", res.is_zero(), format_multivector(res))
    return rep


def _central_complex(fam: PoissonFamily, box: int = 8, window=(-4, 4)) -> CechComplex:
    return CechComplex(fam.central_atlas(), fam.central_bivectors(), box, window)


@dataclass
class KSMatrix:
    columns: list          # one coordinate vector per parameter
    params: tuple
    labels: list           # basis labels of the H^1 report
    rank: int

    @property
    def rows(self) -> list:
        return [[col[r] for col in self.columns] for r in range(len(self.labels))]

    def to_dict(self) -> dict:
        return {
            "params": list(self.params),
            "basis": self.labels,
            "matrix": [[str(x) for x in row] for row in self.rows],
            "rank": self.rank,
        }


def basis_labels(report: CohomologyReport) -> list:
    seen: dict = {}
    out = []
    for w, _ in report.basis:
        idx = seen.get(w, 0)
        seen[w] = idx + 1
        out.append(f"w={','.join(str(x) for x in w)}#{idx}")
    return out


def ks_matrix(fam: PoissonFamily, report: CohomologyReport) -> KSMatrix:
    cx = report.complex
    cols = []
    for p in fam.params:
        coc = infinitesimal_cocycle(fam, p)
        cols.append(project_to_basis(coc.to_cochain(cx), report))
    sparse = [{i: v for i, v in enumerate(col) if v} for col in cols]
    return KSMatrix(cols, fam.params, basis_labels(report), rank(sparse))
