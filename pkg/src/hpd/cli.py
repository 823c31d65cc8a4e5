"""Command-line interface: ``hpd <command> --family ...``.

Exit codes: 0 success, 1 validation failure or obstruction, 2 input error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .cech import CechComplex, _run_slices
from .deformation import basis_labels, infinitesimal_cocycle, ks_matrix, verify_cocycle_identities
from .errors import HPDError, NotSurjective, ParseError, UnsolvableOrder
from .family import PoissonFamily, QuotientFamily, validate_family, validate_quotient
from .familyio import DocumentError, load_family
from .mcsolver import basis_from_report, complete_family, solve_existence, verify_congruences
from .parse import parse_multivector

REPORT_SCHEMA = "hpd.report/1"


class InputError(Exception):
    pass


def _window(text: str) -> tuple:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError("window lower bound exceeds upper bound")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--family", required=True, help="family document path or builtin:<name>")
    shared.add_argument("--order", type=int, default=None, help="truncation order V")
    shared.add_argument("--weight-window", type=_window, default=(-4, 4), metavar="LO:HI")
    shared.add_argument("--box", type=int, default=8, help="exponent box E")
    shared.add_argument("--json", action="store_true", help="print the JSON report")
    shared.add_argument("--threads", type=int, default=1)
    shared.add_argument("--out", default=None, help="write the JSON report to this path")
    shared.add_argument("--timing", action="store_true", help="include wall-clock timing in the report")

    parser = argparse.ArgumentParser(prog="hpd", description="Deformations of holomorphic Poisson structures.")
    parser.add_argument("--version", action="version", version=f"hpd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[shared], help="check a family's Poisson and cocycle conditions")
    p = sub.add_parser("cohomology", parents=[shared], help="hypercohomology of the truncated complex")
    p.add_argument("--lambda0", default=None, help="central bivector on the first chart")
    p.add_argument("-k", type=int, default=1, dest="k")
    p.add_argument("--no-stability", action="store_true", help="skip the box+1 stabilization rerun")
    p.add_argument("--basis", action="store_true", help="include basis cocycles")
    sub.add_parser("ks", parents=[shared], help="Kodaira-Spencer matrix")
    p = sub.add_parser("infinitesimal", parents=[shared], help="first-order cocycle of one direction")
    p.add_argument("--direction", required=True, help="parameter name or comma-separated coefficients")
    p = sub.add_parser("mc-exist", parents=[shared], help="formal Maurer-Cartan solution from an H^1 basis")
    p.add_argument("--lambda0", default=None)
    p.add_argument("--ledger", action="store_true", help="include the per-order obstruction ledger")
    p = sub.add_parser("mc-complete", parents=[shared], help="induce a test family from the target family")
    p.add_argument("--test", required=True, help="test family document")
    return parser


def _atlas_family(fam) -> PoissonFamily:
    if not isinstance(fam, PoissonFamily):
        raise InputError("this command needs an atlas family, not a quotient family")
    return fam


def _complex(fam: PoissonFamily, args, lambda0_text=None) -> CechComplex:
    lam = fam.central_bivectors()
    if lambda0_text is not None:
        ref = fam.atlas.charts[0]
        lam = parse_multivector(lambda0_text, ref.variables, 2, ref.name)
    return CechComplex(fam.central_atlas(), lam, args.box, args.weight_window, args.threads)


def _settings(args, fam) -> dict:
    out = {"family": args.family, "order": fam.order, "box": args.box,
           "weight_window": list(args.weight_window), "threads": args.threads}
    for key in ("k", "lambda0", "direction", "test"):
        if hasattr(args, key) and getattr(args, key) is not None:
            out[key] = getattr(args, key)
    return out


def cmd_validate(fam, args):
    if isinstance(fam, QuotientFamily):
        rep = validate_quotient(fam)
    else:
        rep = validate_family(fam)
    return rep.ok, rep.to_dict()


def cmd_cohomology(fam, args):
    fam = _atlas_family(fam)
    cx = _complex(fam, args, args.lambda0)
    report = _run_slices(cx, args.k)
    if not args.no_stability:
        bigger = CechComplex(cx.atlas, cx.lam[0], args.box + 1, args.weight_window, args.threads)
        report.stable = _run_slices(bigger, args.k).dims == report.dims
    else:
        report.stable = None
    res = report.to_dict(with_basis=args.basis)
    res["dimension"] = report.total
    return True, res


def cmd_ks(fam, args):
    fam = _atlas_family(fam)
    cx = _complex(fam, args)
    report = _run_slices(cx, 1)
    ks = ks_matrix(fam, report)
    identities = {}
    ok = True
    for p in fam.params:
        rep = verify_cocycle_identities(infinitesimal_cocycle(fam, p), cx)
        identities[p] = rep.ok
        ok = ok and rep.ok
    res = ks.to_dict()
    res["h1_dimension"] = report.total
    res["isomorphism"] = ks.rank == report.total == fam.param_count
    res["cocycle_identities"] = identities
    return ok, res


def _direction(text: str):
    if "," in text or text.lstrip("-").replace("/", "").isdigit():
        try:
            return [Fraction(x.strip()) for x in text.split(",")]
        except ValueError:
            raise InputError(f"bad direction {text!r}") from None
    return text


def cmd_infinitesimal(fam, args):
    fam = _atlas_family(fam)
    coc = infinitesimal_cocycle(fam, _direction(args.direction))
    cx = _complex(fam, args)
    rep = verify_cocycle_identities(coc, cx)
    res = coc.to_dict()
    res["identities"] = rep.to_dict()
    return rep.ok, res


def cmd_mc_exist(fam, args):
    fam = _atlas_family(fam)
    cx = _complex(fam, args, args.lambda0)
    report = _run_slices(cx, 1)
    sol = solve_existence(cx, basis_from_report(report), fam.order)
    res = sol.to_dict(cx)
    res["basis"] = basis_labels(report)
    if not args.ledger:
        del res["ledger"]
    res["ledger_clean"] = sol.ledger_clean
    return sol.ledger_clean and res["residual_zero"], res


def cmd_mc_complete(fam, args):
    target = _atlas_family(fam)
    test = _atlas_family(load_family(args.test, args.order))
    V = target.order
    try:
        sol = complete_family(target, test, V, box=args.box, window=args.weight_window)
    except NotSurjective as exc:
        return False, {"error": "NotSurjective", "message": str(exc)}
    except UnsolvableOrder as exc:
        return False, {"error": "UnsolvableOrder", "message": str(exc), "residual": exc.residual}
    res = sol.to_dict()
    res["congruences"] = verify_congruences(target, test, sol, V).to_dict()
    return res["congruences"]["ok"], res


COMMANDS = {
    "validate": cmd_validate,
    "cohomology": cmd_cohomology,
    "ks": cmd_ks,
    "infinitesimal": cmd_infinitesimal,
    "mc-exist": cmd_mc_exist,
    "mc-complete": cmd_mc_complete,
}


def render(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _summary(command: str, ok: bool, res: dict) -> str:
    status = "ok" if ok else "FAILED"
    if command == "cohomology":
        return f"H^{res['k']}: dimension {res['dimension']} (stable: {res['stable']})"
    if command == "ks":
        return f"Kodaira-Spencer rank {res['rank']} of {len(res['params'])} parameters, dim H^1 = {res['h1_dimension']}"
    if command == "validate":
        lines = [f"validation {status}"]
        for c in res["checks"]:
            if not c["passed"]:
                lines.append(f"  failed: {c['check']}: {c['residual']}")
        return "\n".join(lines)
    if command == "mc-exist":
        return f"Maurer-Cartan solution to order {res['order']}: {status}"
    if command == "mc-complete":
        if "h" in res:
            return "\n".join([f"completeness to order {res['order']}: {status}"] +
                             [f"  {p} = {e}" for p, e in res["h"].items()])
        return f"completeness failed: {res['message']}"
    return f"{command}: {status}"


def _error(kind: str, exc: Exception, as_json: bool) -> int:
    if as_json:
        detail = {"error": kind, "message": str(exc)}
        for attr in ("offset", "path"):
            if getattr(exc, attr, None) is not None:
                detail[attr] = getattr(exc, attr)
        sys.stderr.write(render(detail))
    else:
        sys.stderr.write(f"hpd: {kind}: {exc}\n")
    return 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    start = time.perf_counter()
    try:
        fam = load_family(args.family, args.order)
        ok, results = COMMANDS[args.command](fam, args)
    except (DocumentError, ParseError, InputError, OSError) as exc:
        return _error(type(exc).__name__, exc, args.json)
    except HPDError as exc:
        return _error(type(exc).__name__, exc, args.json)
    report = {
        "schema": REPORT_SCHEMA,
        "command": args.command,
        "settings": _settings(args, fam),
        "status": "ok" if ok else "fail",
        "results": results,
    }
    if args.timing:
        report["timing"] = {"seconds": round(time.perf_counter() - start, 3)}
    text = render(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    if args.json:
        sys.stdout.write(text)
    else:
        sys.stdout.write(_summary(args.command, ok, results) + "\n")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
