"""Čech total complex of the truncated Poisson complex on monomial atlases.

Cochains of total degree k are maps ``(I, q) -> Multivector`` where ``I`` is
an increasing tuple of chart indices with ``len(I) - 1 + q - 1 = k`` and the
multivector is written in the coordinates of chart ``I[0]``.  The total
differential is ``D = (-1)^(p+q) delta + [L0, -]``.

Finiteness comes from the torus action on a monomial atlas: every monomial
multivector has a character in the lattice of chart 0, the Čech
differential preserves it and bracketing with a homogeneous ``L0`` shifts it
by the character of ``L0``.  Slices of fixed weight are finite once the
characters are bounded by the exponent box.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence

from .errors import (InhomogeneousBase, NotACocycle, OutOfTruncation, UnsupportedAtlas,
                     DegreeMismatch)
from .exactalg import LPoly, ZERO, mono_from_dict
from .family import Atlas
from .linalg import independent_subset, nullspace, rank, solve
from .multivector import Multivector, bracket_any, jacobi_defect, pushforward


# -- cochains -------------------------------------------------------------------

@dataclass
class CechCochain:
    p: int
    q: int
    values: dict


class TotalCochain:
    """Element of the total complex; ``values[(I, q)]`` is a Multivector on chart ``I[0]``."""

    __slots__ = ("k", "values")

    def __init__(self, k: int, values: Mapping[tuple, Multivector] | None = None):
        self.k = int(k)
        clean = {}
        for (I, q), m in (values or {}).items():
            I = tuple(I)
            if len(I) - 1 + q - 1 != self.k:
                raise DegreeMismatch(f"part {(I, q)} does not have total degree {self.k}")
            if m.degree != q:
                raise DegreeMismatch(f"part {(I, q)} holds a degree-{m.degree} multivector")
            if not m.is_zero():
                clean[(I, q)] = m
        self.values = clean

    @property
    def parts(self) -> list:
        out: dict = {}
        for (I, q), m in self.values.items():
            out.setdefault((len(I) - 1, q), {})[I] = m
        return [CechCochain(p, q, v) for (p, q), v in sorted(out.items())]

    def is_zero(self) -> bool:
        return not self.values

    def __add__(self, other: "TotalCochain") -> "TotalCochain":
        if self.k != other.k and not other.is_zero() and not self.is_zero():
            raise DegreeMismatch("adding cochains of different total degree")
        k = self.k if not self.is_zero() else other.k
        out = dict(self.values)
        for key, m in other.values.items():
            out[key] = out[key] + m if key in out else m
        return TotalCochain(k, out)

    def __neg__(self) -> "TotalCochain":
        return TotalCochain(self.k, {key: -m for key, m in self.values.items()})

    def __sub__(self, other: "TotalCochain") -> "TotalCochain":
        return self + (-other)

    def scale(self, f) -> "TotalCochain":
        return TotalCochain(self.k, {key: m.scale(f) for key, m in self.values.items()})

    def map(self, fn) -> "TotalCochain":
        return TotalCochain(self.k, {key: fn(m) for key, m in self.values.items()})

    def truncate(self, params, order) -> "TotalCochain":
        return self.map(lambda m: m.truncate(params, order))

    def homogeneous_part(self, params, degree) -> "TotalCochain":
        return self.map(lambda m: m.homogeneous_part(params, degree))

    def split_by(self, params: Sequence[str]) -> dict:
        """Group by parameter monomial: {param monomial: parameter-free cochain}."""
        ps = tuple(params)
        out: dict = {}
        for key, m in self.values.items():
            for J, c in m.comps.items():
                for pm, coeff in c.split_by(ps).items():
                    out.setdefault(pm, {}).setdefault(key, {})[J] = coeff
        result = {}
        for pm, parts in out.items():
            vals = {}
            for key, comps in parts.items():
                src = self.values[key]
                vals[key] = Multivector(src.variables, src.degree, comps, src.chart)
            result[pm] = TotalCochain(self.k, vals)
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, TotalCochain):
            return NotImplemented
        return (self - other).is_zero()

    def __repr__(self) -> str:
        inner = ", ".join(f"{I}|q{q}: {m}" for (I, q), m in sorted(self.values.items()))
        return f"TotalCochain(k={self.k}, {{{inner}}})"


def zero_cochain(k: int) -> TotalCochain:
    return TotalCochain(k, {})


# -- integer matrices -------------------------------------------------------------

def _mat_mul(a, b):
    return [[sum(a[i][t] * b[t][j] for t in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def _mat_inv(m):
    """Exact inverse of a square integer matrix; entries Fractions."""
    n = len(m)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise UnsupportedAtlas("singular exponent matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _vec_mat(v, m):
    return tuple(sum(v[i] * m[i][j] for i in range(len(v))) for j in range(len(m[0])))


def _integer_complement(rows: list, n: int) -> list:
    """Integer basis (as rows) of the orthogonal complement of the span of ``rows``."""
    # nullspace of the matrix whose rows are ``rows``: x with r . x = 0 for all r
    transposed = [{j: Fraction(rows[j][i]) for j in range(len(rows)) if rows[j][i]} for i in range(n)]
    kern = nullspace(transposed) if rows else [{i: Fraction(1)} for i in range(n)]
    out = []
    for vec in kern:
        dens = lcm(*(v.denominator for v in vec.values()))
        row = [int(vec.get(i, 0) * dens) for i in range(n)]
        g = gcd(*row)
        out.append([x // g for x in row] if g else row)
    return out


# -- the complex ------------------------------------------------------------------

def _monomial_exponents(r, variables) -> tuple | None:
    """Exponent vector of a RatFn that is c * monomial, else None."""
    q = r.try_lpoly()
    if q is None or not q.is_monomial():
        return None
    (m, _), = q.terms.items()
    d = dict(m)
    if set(d) - set(variables):
        return None
    return tuple(d.get(v, 0) for v in variables)


class CechComplex:
    """Graded pieces of the total complex for (atlas, L0) with exponent box ``box``."""

    def __init__(self, atlas: Atlas, lambda0, box: int = 8, window: tuple = (-4, 4),
                 threads: int = 1):
        if atlas.params:
            atlas = atlas.central()
        self.atlas = atlas
        self.box = int(box)
        self.window = (int(window[0]), int(window[1]))
        self.threads = max(1, int(threads))
        names = atlas.names
        self.names = names
        self.N = len(names)
        dims = {c.dim for c in atlas.charts}
        if len(dims) != 1:
            raise UnsupportedAtlas("charts of different dimensions")
        self.n = dims.pop()
        self.vars = [atlas.charts[i].variables for i in range(self.N)]
        self._init_lattice()
        self._init_lambda(lambda0)
        self._init_simplices()
        self._push_cache: dict = {}
        self._br_cache: dict = {}
        self._slice_cache: dict = {}

    # lattice data
    def _init_lattice(self):
        n = self.n
        M = {0: [[int(i == j) for j in range(n)] for i in range(n)]}
        frontier = [0]
        while frontier:
            j = frontier.pop(0)
            for k in range(self.N):
                if k in M or not self.atlas.has_overlap(self.names[k], self.names[j]):
                    continue
                f = self.atlas.transition(self.names[k], self.names[j])
                rows = []
                for comp in f.components:
                    e = _monomial_exponents(comp, self.vars[j])
                    if e is None:
                        raise UnsupportedAtlas(f"transition {self.names[j]}->{self.names[k]} is not monomial")
                    rows.append(list(e))
                M[k] = _mat_mul(rows, M[j])
                frontier.append(k)
        if len(M) != self.N:
            raise UnsupportedAtlas("atlas is not connected")
        self.M = [M[i] for i in range(self.N)]
        self.Minv = []
        for i in range(self.N):
            inv = _mat_inv(self.M[i])
            if any(x.denominator != 1 for row in inv for x in row):
                raise UnsupportedAtlas("exponent matrix is not unimodular")
            self.Minv.append([[int(x) for x in row] for row in inv])

    def _init_lambda(self, lambda0):
        ref = self.names[0]
        if isinstance(lambda0, Multivector):
            lam = {ref: lambda0}
            if lambda0.variables != self.vars[0]:
                raise UnsupportedAtlas("L0 is not written on the reference chart")
            for i in range(1, self.N):
                f = self.atlas.transition(self.names[i], ref)
                lam[self.names[i]] = pushforward(lambda0, f)
        else:
            lam = dict(lambda0)
        self.lam = [Multivector(self.vars[i], 2, lam[self.names[i]].comps, self.names[i])
                    for i in range(self.N)]
        if self.n >= 3:
            for i, L in enumerate(self.lam):
                if any(not d.is_zero() for d in jacobi_defect(L).values()):
                    raise InhomogeneousBase(f"L0 is not Poisson on chart {self.names[i]}")
        chars = []
        for J, c in self.lam[0].comps.items():
            for m in c.terms:
                a = tuple(dict(m).get(v, 0) for v in self.vars[0])
                chars.append(self.character(0, J, a))
        chars = sorted(set(chars))
        if not chars:
            self.chi_lambda = tuple(0 for _ in range(self.n))
            self.grading = [[int(i == j) for j in range(self.n)] for i in range(self.n)]
        else:
            self.chi_lambda = chars[0]
            diffs = [[x - y for x, y in zip(c, chars[0])] for c in chars[1:]]
            self.grading = _integer_complement(diffs, self.n) if diffs else \
                [[int(i == j) for j in range(self.n)] for i in range(self.n)]
            if not self.grading:
                raise InhomogeneousBase("L0 admits no nontrivial weight grading")
        self.fine = len(self.grading) == self.n and all(
            self.grading[i][j] == int(i == j) for i in range(self.n) for j in range(self.n))

    def _init_simplices(self):
        self.simplices: dict = {}
        for p in range(self.N):
            out = []
            for I in combinations(range(self.N), p + 1):
                if all(self.atlas.has_overlap(self.names[a], self.names[b]) for a, b in combinations(I, 2)):
                    out.append(I)
            self.simplices[p] = out
        self.inverted: dict = {}
        for p, Is in self.simplices.items():
            for I in Is:
                inv = set()
                i0 = I[0]
                for k in I[1:]:
                    rows = _mat_mul(self.M[k], self.Minv[i0])
                    for row in rows:
                        for alpha, e in enumerate(row):
                            if e < 0:
                                inv.add(alpha)
                self.inverted[I] = frozenset(inv)
        self.cofaces: dict = {}
        for p, Is in self.simplices.items():
            for I in Is:
                outs = []
                for J in self.simplices.get(p + 1, []):
                    if set(I) <= set(J):
                        extra = next(x for x in J if x not in I)
                        outs.append((J, J.index(extra)))
                self.cofaces[I] = outs

    # characters and weights
    def character(self, chart: int, J: Sequence[int], a: Sequence[int]) -> tuple:
        v = [a[i] - (1 if i in J else 0) for i in range(self.n)]
        return _vec_mat(v, self.M[chart])

    def weight_of_character(self, chi: Sequence[int], q: int) -> tuple:
        shifted = [c - q * e for c, e in zip(chi, self.chi_lambda)]
        return tuple(sum(r[i] * shifted[i] for i in range(self.n)) for r in self.grading)

    def exponent_of(self, chart: int, J: Sequence[int], chi: Sequence[int]) -> tuple:
        a = _vec_mat(chi, self.Minv[chart])
        return tuple(a[i] + (1 if i in J else 0) for i in range(self.n))

    def admissible(self, I: tuple, a: Sequence[int]) -> bool:
        inv = self.inverted[I]
        return all(e >= 0 or alpha in inv for alpha, e in enumerate(a))

    def in_box(self, chi: Sequence[int]) -> bool:
        return all(abs(c) <= self.box for c in chi)

    def weights(self) -> list:
        lo, hi = self.window
        return list(product(range(lo, hi + 1), repeat=len(self.grading)))

    # slices
    def _characters_of_weight(self, w: tuple, q: int) -> list:
        if self.fine:
            chi = tuple(x + q * e for x, e in zip(w, self.chi_lambda))
            return [chi] if self.in_box(chi) else []
        out = []
        for chi in product(range(-self.box, self.box + 1), repeat=self.n):
            if self.weight_of_character(chi, q) == w:
                out.append(chi)
        return out

    def slice_basis(self, w: tuple, k: int) -> list:
        """Sorted labels ``(I, q, J, a)`` spanning total degree ``k`` at weight ``w``."""
        key = (w, k)
        hit = self._slice_cache.get(key)
        if hit is not None:
            return hit
        out = []
        for q in range(1, self.n + 1):
            p = k + 1 - q
            if p < 0 or p not in self.simplices:
                continue
            chis = self._characters_of_weight(w, q)
            for I in self.simplices[p]:
                for J in combinations(range(self.n), q):
                    for chi in chis:
                        a = self.exponent_of(I[0], J, chi)
                        if self.admissible(I, a):
                            out.append((I, q, J, a))
        out.sort()
        self._slice_cache[key] = out
        return out

    def label_cochain(self, labels: Sequence, coeffs: Mapping[int, Fraction], k: int) -> TotalCochain:
        vals: dict = {}
        for idx, c in coeffs.items():
            I, q, J, a = labels[idx]
            mono = mono_from_dict(dict(zip(self.vars[I[0]], a)))
            comps = vals.setdefault((I, q), {})
            comps[J] = comps.get(J, ZERO) + LPoly.monomial(mono, c)
        return TotalCochain(k, {key: Multivector(self.vars[key[0][0]], key[1], comps, self.names[key[0][0]])
                                for key, comps in vals.items()})

    def cochain_labels(self, c: TotalCochain) -> dict:
        """Decompose a parameter-free cochain into ``{label: coefficient}``."""
        out = {}
        for (I, q), m in c.values.items():
            vs = self.vars[I[0]]
            for J, poly in m.comps.items():
                for mono, coef in poly.terms.items():
                    d = dict(mono)
                    if set(d) - set(vs):
                        raise OutOfTruncation(f"coefficient involves non-chart symbols {sorted(set(d) - set(vs))}")
                    a = tuple(d.get(v, 0) for v in vs)
                    if not self.admissible(I, a):
                        raise OutOfTruncation(f"monomial {a} is not regular on {I}")
                    out[(I, q, J, a)] = out.get((I, q, J, a), 0) + coef
        return {k: v for k, v in out.items() if v}

    def weight_of_label(self, label) -> tuple:
        I, q, J, a = label
        return self.weight_of_character(self.character(I[0], J, a), q)

    # differential
    def _push(self, src: int, dst: int, J: tuple, a: tuple) -> Multivector:
        key = (src, dst, J, a)
        hit = self._push_cache.get(key)
        if hit is None:
            mono = mono_from_dict(dict(zip(self.vars[src], a)))
            m = Multivector(self.vars[src], len(J), {J: LPoly.monomial(mono)}, self.names[src])
            hit = pushforward(m, self.atlas.transition(self.names[dst], self.names[src]))
            self._push_cache[key] = hit
        return hit

    def _bracket(self, chart: int, J: tuple, a: tuple) -> Multivector:
        key = (chart, J, a)
        hit = self._br_cache.get(key)
        if hit is None:
            mono = mono_from_dict(dict(zip(self.vars[chart], a)))
            m = Multivector(self.vars[chart], len(J), {J: LPoly.monomial(mono)}, self.names[chart])
            hit = bracket_any(self.lam[chart], m)
            self._br_cache[key] = hit
        return hit

    def differential(self, c: TotalCochain) -> TotalCochain:
        """``D = (-1)^(p+q) delta + [L0, -]`` on an arbitrary cochain (coefficients may carry parameters)."""
        out: dict = {}

        def acc(key, m):
            if m.is_zero():
                return
            out[key] = out[key] + m if key in out else m

        for (I, q), m in c.values.items():
            p = len(I) - 1
            i0 = I[0]
            sign = -1 if (p + q) & 1 else 1
            if q + 1 <= self.n:
                acc((I, q + 1), self._bracket_poly(i0, m))
            for Jt, r in self.cofaces[I]:
                s = sign * (-1 if r & 1 else 1)
                if r == 0:
                    val = self._push_poly(i0, Jt[0], m)
                else:
                    val = m
                acc((Jt, q), val if s > 0 else -val)
        return TotalCochain(c.k + 1, out)

    def _split_terms(self, chart: int, m: Multivector):
        vs = self.vars[chart]
        vset = set(vs)
        for J, poly in m.comps.items():
            for mono, coef in poly.terms.items():
                chart_part = tuple(x for x in mono if x[0] in vset)
                rest = tuple(x for x in mono if x[0] not in vset)
                d = dict(chart_part)
                yield J, tuple(d.get(v, 0) for v in vs), LPoly.monomial(rest, coef)

    def _push_poly(self, src: int, dst: int, m: Multivector) -> Multivector:
        total = Multivector(self.vars[dst], m.degree, {}, self.names[dst])
        for J, a, coef in self._split_terms(src, m):
            total = total + self._push(src, dst, J, a).scale(coef)
        return total

    def _bracket_poly(self, chart: int, m: Multivector) -> Multivector:
        total = Multivector(self.vars[chart], m.degree + 1, {}, self.names[chart])
        for J, a, coef in self._split_terms(chart, m):
            total = total + self._bracket(chart, J, a).scale(coef)
        return total

    def push_to(self, m: Multivector, src: int, dst: int) -> Multivector:
        """Re-express a (possibly parameter-dependent) multivector from chart ``src`` in chart ``dst``."""
        if src == dst:
            return m
        return self._push_poly(src, dst, m)

    def bracket_lambda(self, chart: int, m: Multivector) -> Multivector:
        return self._bracket_poly(chart, m)

    # slice linear algebra
    def slice_matrix(self, w: tuple, k: int):
        """Columns of D: C^k_w -> C^{k+1}_w, plus the target label index (extended by leaks)."""
        src = self.slice_basis(w, k)
        tgt = self.slice_basis(w, k + 1)
        index = {lab: i for i, lab in enumerate(tgt)}
        extra: dict = {}
        cols = []
        for lab in src:
            img = self.differential(self.label_cochain([lab], {0: Fraction(1)}, k))
            col = {}
            for tl, v in self.cochain_labels(img).items():
                idx = index.get(tl)
                if idx is None:
                    idx = extra.setdefault(tl, len(tgt) + len(extra))
                col[idx] = v
            cols.append(col)
        return src, tgt, cols, extra

    def slice_cohomology(self, w: tuple, k: int) -> "SliceResult":
        key = ("H", w, k)
        hit = self._slice_cache.get(key)
        if hit is not None:
            return hit
        basis_k = self.slice_basis(w, k)
        _, _, d_prev, leak_prev = self.slice_matrix(w, k - 1) if k >= 1 else ([], [], [], {})
        _, _, d_k, leak_k = self.slice_matrix(w, k)
        kern = nullspace(d_k)
        image_rank = rank(d_prev)
        chosen = independent_subset(kern, start=d_prev)
        reps = [kern[i] for i in chosen]
        res = SliceResult(w, k, basis_k, d_prev, reps, len(kern) - image_rank, bool(leak_prev or leak_k))
        if len(reps) != res.dim:
            raise AssertionError("inconsistent slice cohomology")
        self._slice_cache[key] = res
        return res

    def solve_exact(self, c: TotalCochain) -> TotalCochain | None:
        """Some x with D x = c (deterministic pivoting), or None if c is not exact in the box."""
        k = c.k
        labels = self.cochain_labels(c)
        by_w: dict = {}
        for lab, v in labels.items():
            by_w.setdefault(self.weight_of_label(lab), {})[lab] = v
        total = zero_cochain(k - 1)
        for w in sorted(by_w):
            src, tgt, cols, extra = self.slice_matrix(w, k - 1)
            index = {lab: i for i, lab in enumerate(tgt)}
            index.update(extra)
            target = {}
            for lab, v in by_w[w].items():
                if lab not in index:
                    return None
                target[index[lab]] = v
            x = solve(cols, target)
            if x is None:
                return None
            total = total + self.label_cochain(src, x, k - 1)
        return total


@dataclass
class SliceResult:
    weight: tuple
    k: int
    basis: list
    image: list
    representatives: list
    dim: int
    leaked: bool


@dataclass
class CohomologyReport:
    k: int
    dims: dict
    total: int
    basis: list  # [(weight, TotalCochain)]
    settings: dict
    stable: bool
    complex: CechComplex | None = field(default=None, repr=False)
    slices: dict = field(default_factory=dict, repr=False)

    def to_dict(self, with_basis: bool = True) -> dict:
        out = {
            "k": self.k,
            "total": self.total,
            "dimensions": [{"weight": list(w), "dim": d} for w, d in sorted(self.dims.items()) if d],
            "stable": self.stable,
            "settings": self.settings,
        }
        if with_basis:
            out["basis"] = [{"weight": list(w), "cochain": cochain_to_json(c, self.complex)}
                            for w, c in self.basis]
        return out


def cochain_to_json(c: TotalCochain, cx: CechComplex | None = None) -> list:
    from .parse import format_multivector
    out = []
    for (I, q), m in sorted(c.values.items()):
        names = [cx.names[i] for i in I] if cx is not None else list(I)
        out.append({"simplex": names, "q": q, "expr": format_multivector(m)})
    return out


def enumerate_slice(atlas: Atlas, lambda0, p: int, q: int, w, box: int = 8) -> "GradedSlice":
    cx = CechComplex(atlas, lambda0, box)
    w = tuple(w) if isinstance(w, (tuple, list)) else (w,)
    if q < 1 or q > cx.n or p not in cx.simplices:
        return GradedSlice(w, box, p, q, [])
    labels = [lab for lab in cx.slice_basis(w, p + q - 1) if len(lab[0]) == p + 1 and lab[1] == q]
    return GradedSlice(w, box, p, q, labels)


@dataclass
class GradedSlice:
    weight: tuple
    box: int
    p: int
    q: int
    basis: list

    def __len__(self):
        return len(self.basis)


def total_differential(c: TotalCochain, complex_: CechComplex) -> TotalCochain:
    return complex_.differential(c)


def hypercohomology(atlas: Atlas, lambda0, k: int, window: tuple = (-4, 4), box: int = 8,
                    threads: int = 1, check_stability: bool = True,
                    weights: Iterable | None = None) -> CohomologyReport:
    """Dimensions and basis cocycles of H^k, slice by slice."""
    cx = CechComplex(atlas, lambda0, box, window, threads)
    report = _run_slices(cx, k, weights)
    stable = True
    if check_stability:
        cx2 = CechComplex(atlas, lambda0, box + 1, window, threads)
        other = _run_slices(cx2, k, weights)
        stable = other.dims == report.dims
    report.stable = stable
    return report


def _run_slices(cx: CechComplex, k: int, weights=None) -> CohomologyReport:
    ws = sorted(cx.weights() if weights is None else [tuple(w) for w in weights])
    if cx.threads > 1:
        with ThreadPoolExecutor(max_workers=cx.threads) as pool:
            results = list(pool.map(lambda w: cx.slice_cohomology(w, k), ws))
    else:
        results = [cx.slice_cohomology(w, k) for w in ws]
    dims = {}
    basis = []
    slices = {}
    for res in results:
        dims[res.weight] = res.dim
        slices[res.weight] = res
        for vec in res.representatives:
            basis.append((res.weight, cx.label_cochain(res.basis, vec, k)))
    settings = {"window": list(cx.window), "box": cx.box, "grading": cx.grading,
                "lambda_character": list(cx.chi_lambda), "charts": cx.names}
    return CohomologyReport(k, dims, sum(dims.values()), basis, settings, True, cx, slices)


def project_to_basis(c: TotalCochain, report: CohomologyReport) -> list:
    """Coordinates of the class of ``c`` in the report's basis."""
    cx = report.complex
    if not cx.differential(c).is_zero():
        raise NotACocycle("cochain is not D-closed")
    labels = cx.cochain_labels(c)
    by_w: dict = {}
    for lab, v in labels.items():
        by_w.setdefault(cx.weight_of_label(lab), {})[lab] = v
    coords = [Fraction(0)] * len(report.basis)
    offsets = {}
    pos = 0
    for w, _ in report.basis:
        offsets.setdefault(w, pos)
        pos += 1
    for w, part in sorted(by_w.items()):
        res = report.slices.get(w)
        if res is None:
            # outside the computed window: acceptable only when exact there
            if cx.solve_exact(cx.label_cochain(list(part), {i: v for i, v in enumerate(part.values())}, c.k)) is None:
                raise OutOfTruncation(f"class has a component at weight {w} outside the window")
            continue
        index = {lab: i for i, lab in enumerate(res.basis)}
        target = {}
        for lab, v in part.items():
            if lab not in index:
                raise OutOfTruncation(f"term {lab} lies outside the exponent box")
            target[index[lab]] = v
        cols = list(res.representatives) + list(res.image)
        x = solve(cols, target)
        if x is None:
            raise OutOfTruncation(f"component at weight {w} is not in span of basis and image")
        start = offsets.get(w, 0)
        for i in range(len(res.representatives)):
            coords[start + i] = x.get(i, Fraction(0))
    return coords
