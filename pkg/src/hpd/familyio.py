"""JSON family documents (schema ``hpd.family/1``)."""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Sequence

from .errors import HPDError, InvalidParams, ParseError
from .exactalg import RatFn
from .family import Atlas, Chart, PoissonFamily, QuotientFamily
from .multivector import ChartMap, Multivector
from .parse import format_multivector, format_ratfn, parse_multivector, parse_rational

SCHEMA = "hpd.family/1"
BUILTIN_PREFIX = "builtin:"


class DocumentError(HPDError, ValueError):
    """A family document that does not describe a family; ``path`` locates the offending field."""

    def __init__(self, message: str, path: str = "", offset: int | None = None):
        where = f" in {path}" if path else ""
        at = f" at byte {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}{at}")
        self.path = path
        self.offset = offset


def _require(doc: dict, key: str, path: str):
    if key not in doc:
        raise DocumentError(f"missing field {key!r}", path)
    return doc[key]


def _rational(text: str, variables: Sequence[str], path: str) -> RatFn:
    if not isinstance(text, str):
        raise DocumentError("expected an expression string", path)
    try:
        return parse_rational(text, variables)
    except ParseError as exc:
        raise DocumentError(exc.message, path, exc.offset) from None


def _bivector(entry, variables: Sequence[str], chart: str, path: str) -> Multivector:
    text = " + ".join(f"({t})" for t in entry) if isinstance(entry, list) else entry
    if isinstance(entry, list) and not entry:
        text = "0"
    if not isinstance(text, str):
        raise DocumentError("expected an expression string or a list of terms", path)
    try:
        return parse_multivector(text, variables, 2, chart)
    except ParseError as exc:
        raise DocumentError(exc.message, path, exc.offset) from None


def _charts(doc: dict) -> list:
    out = []
    for n, c in enumerate(_require(doc, "charts", "")):
        path = f"charts[{n}]"
        variables = tuple(_require(c, "variables", path))
        dim = c.get("dim", len(variables))
        if dim != len(variables):
            raise DocumentError(f"dim {dim} does not match {len(variables)} variables", path)
        out.append(Chart(_require(c, "name", path), variables))
    if len({c.name for c in out}) != len(out):
        raise DocumentError("duplicate chart names", "charts")
    return out


def _map(entry: dict, source: Chart, target: Chart, params: tuple, path: str) -> ChartMap:
    fwd = [_rational(e, None, f"{path}.forward[{i}]") for i, e in enumerate(_require(entry, "forward", path))]
    bwd = entry.get("backward")
    inv = None
    if bwd is not None:
        inv = [_rational(e, None, f"{path}.backward[{i}]") for i, e in enumerate(bwd)]
    if len(fwd) != target.dim:
        raise DocumentError(f"forward has {len(fwd)} components, target chart has {target.dim}", path)
    if inv is not None and len(inv) != source.dim:
        raise DocumentError(f"backward has {len(inv)} components, source chart has {source.dim}", path)
    return ChartMap(source.name, target.name, source.variables, target.variables, fwd, inv, params)


def _relations(doc: dict) -> dict:
    out = {}
    for n, text in enumerate(doc.get("relations", [])):
        path = f"relations[{n}]"
        if not isinstance(text, str) or text.count("=") != 1:
            raise DocumentError("relation must look like 'name = expression'", path)
        lhs, rhs = (s.strip() for s in text.split("="))
        if not lhs.isidentifier():
            raise DocumentError("left side of a relation must be a symbol", path)
        out[lhs] = _rational(rhs, None, path)
    return out


def family_from_dict(doc: dict):
    """Build a PoissonFamily (kind ``atlas``) or QuotientFamily (kind ``quotient``)."""
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    schema = doc.get("schema", SCHEMA)
    if schema != SCHEMA:
        raise DocumentError(f"unsupported schema {schema!r}", "schema")
    kind = doc.get("kind", "atlas")
    params_doc = doc.get("params", {})
    params = tuple(params_doc.get("names", []))
    order = int(params_doc.get("order", 3))
    constants = tuple(doc.get("constants", []))
    name = doc.get("name", "")
    charts = _charts(doc)
    by_name = {c.name: c for c in charts}
    symbols = params + constants
    if kind == "atlas":
        maps = []
        for n, ov in enumerate(doc.get("overlaps", [])):
            path = f"overlaps[{n}]"
            src, tgt = _require(ov, "source", path), _require(ov, "target", path)
            if src not in by_name or tgt not in by_name:
                raise DocumentError("overlap refers to an unknown chart", path)
            maps.append(_map(ov, by_name[src], by_name[tgt], symbols, path))
        triples = doc.get("triples")
        atlas = Atlas(charts, maps, triples, params, constants)
        bivs = {}
        entry = _require(doc, "bivectors", "")
        for c in charts:
            if c.name not in entry:
                raise DocumentError(f"no bivector for chart {c.name!r}", "bivectors")
            bivs[c.name] = _bivector(entry[c.name], c.variables, c.name, f"bivectors.{c.name}")
        return PoissonFamily(atlas, bivs, order, name)
    if kind == "quotient":
        if len(charts) != 1:
            raise DocumentError("a quotient family has exactly one chart", "charts")
        chart = charts[0]
        gens = []
        for n, g in enumerate(_require(doc, "generators", "")):
            path = f"generators[{n}]"
            gens.append((g.get("name", f"g{n + 1}"), _map(g, chart, chart, symbols, path)))
        biv = _bivector(_require(doc, "bivector", ""), chart.variables, chart.name, "bivector")
        return QuotientFamily(chart, gens, biv, params, constants, _relations(doc), order, name)
    raise DocumentError(f"unknown kind {kind!r}", "kind")


def family_to_dict(fam) -> dict:
    if isinstance(fam, QuotientFamily):
        doc = {
            "schema": SCHEMA,
            "name": fam.name,
            "kind": "quotient",
            "params": {"names": list(fam.params), "order": fam.order},
            "constants": list(fam.constants),
            "charts": [{"name": fam.chart.name, "dim": fam.chart.dim, "variables": list(fam.chart.variables)}],
            "generators": [{"name": n, "forward": [format_ratfn(c) for c in g.components],
                            "backward": [format_ratfn(c) for c in g.inverse] if g.inverse else None}
                           for n, g in fam.generators],
            "bivector": format_multivector(fam.bivector),
            "relations": [f"{k} = {format_ratfn(RatFn.of(v))}" for k, v in sorted(fam.relations.items())],
        }
        for g in doc["generators"]:
            if g["backward"] is None:
                del g["backward"]
        return doc
    atlas = fam.atlas
    overlaps = []
    seen = set()
    for (tgt, src) in sorted(atlas.maps):
        if (src, tgt) in seen:
            continue
        f = atlas.maps[(tgt, src)]
        entry = {"source": src, "target": tgt, "forward": [format_ratfn(c) for c in f.components]}
        if f.inverse is not None:
            entry["backward"] = [format_ratfn(c) for c in f.inverse]
            seen.add((tgt, src))
        seen.add((src, tgt))
        overlaps.append(entry)
    return {
        "schema": SCHEMA,
        "name": fam.name,
        "kind": "atlas",
        "params": {"names": list(atlas.params), "order": fam.order},
        "constants": list(atlas.constants),
        "charts": [{"name": c.name, "dim": c.dim, "variables": list(c.variables)} for c in atlas.charts],
        "overlaps": overlaps,
        "triples": [list(t) for t in atlas.triples],
        "bivectors": {c: format_multivector(b) for c, b in sorted(fam.bivectors.items())},
    }


def dumps(fam) -> str:
    return json.dumps(family_to_dict(fam), indent=2, sort_keys=True) + "\n"


def builtin_names() -> list:
    root = resources.files("hpd") / "data" / "families"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_family(source: str | Path, order: int | None = None):
    """Load from a path or ``builtin:<name>``; ``order`` overrides the document's truncation order."""
    text_source = str(source)
    if text_source.startswith(BUILTIN_PREFIX):
        name = text_source[len(BUILTIN_PREFIX):]
        res = resources.files("hpd") / "data" / "families" / f"{name}.json"
        if not res.is_file():
            raise InvalidParams(f"unknown builtin family {name!r}; available: {', '.join(builtin_names())}")
        text = res.read_text()
    else:
        text = Path(source).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    fam = family_from_dict(doc)
    if order is not None:
        fam.order = int(order)
    return fam
