"""Command-line front end.

Every command prints a JSON report (sorted keys) and optionally writes it to
``--report``.  Exit codes: 0 ok, 2 obstructions or failed trials, 3 invalid
input, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import io
from .berezinian import BerezinianShapeError, SingularD, ber_closed, ber_direct
from .integrate import (
    IntegralResult,
    SupportViolation,
    TruncationTooShallow,
    component_index,
    constraints_def1,
    integrate_def1,
    integrate_def2,
    integrate_def3,
)
from .numeric import DEFAULT_DOMAIN, ResampleExhausted
from .scalar import DivisionNearZero, NonFiniteValue, PoleAtOrigin, UnboundAtom, function_atoms, to_text
from .suite import invariance_suite
from .superfunction import LaurentNotSupported
from .transform import jacobian

EXIT_OK, EXIT_OBSTRUCTED, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3, 4

INVALID = (
    io.InvalidInput,
    SingularD,
    BerezinianShapeError,
    PoleAtOrigin,
    TruncationTooShallow,
    LaurentNotSupported,
    UnboundAtom,
    ValueError,
)
NUMERIC = (NonFiniteValue, DivisionNearZero, SupportViolation, ResampleExhausted, FloatingPointError)


def _domain(text: str) -> tuple[float, float, float, float]:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad domain {text!r}") from exc
    if len(parts) != 4 or parts[0] >= parts[1] or parts[2] >= parts[3] or parts[2] < 0:
        raise argparse.ArgumentTypeError("domain must be x0,x1,w0,w1 with x0<x1, 0<=w0<w1")
    return parts


def _restrict(text: str) -> list[tuple[int, int, int]] | bool:
    if text == "auto":
        return True
    try:
        return [component_index(name.strip()) for name in text.split(",") if name.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad component list {text!r}") from exc


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("expected a non-negative integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="z22calc", description="Calculus on the minimal Z2xZ2-superspace.")
    sub = p.add_subparsers(dest="command", required=True)

    def add_report(sp_):
        sp_.add_argument("--report", type=Path, help="also write the JSON report here")

    b = sub.add_parser("ber", help="Berezinian of a coordinate change")
    b.add_argument("transform", help="transform file, or 'generic' / 'identity'")
    b.add_argument("--mode", choices=("closed", "direct", "both"), default="both")
    add_report(b)

    i = sub.add_parser("integrate", help="integrate a function, optionally in old coordinates")
    i.add_argument("function", help="function file, or 'generic'")
    i.add_argument("--def", dest="def_id", type=int, choices=(1, 2, 3), required=True)
    i.add_argument("--transform", help="transform file, or 'generic' / 'identity'")
    i.add_argument("--ell", type=_nonneg, default=0)
    i.add_argument("--laurent-depth", type=_nonneg)
    i.add_argument("--trunc", type=_nonneg)
    i.add_argument("--domain", type=_domain, default=DEFAULT_DOMAIN)
    i.add_argument("--order", type=_positive, default=64)
    i.add_argument("--panels", type=_positive, default=8)
    i.add_argument("--keep-a11", action="store_true")
    i.add_argument("--seed", type=int, help="accepted for symmetry with the suites; unused")
    add_report(i)

    c = sub.add_parser("constraints", help="components that must vanish for the first definition")
    c.add_argument("ell", type=_nonneg)
    add_report(c)

    v = sub.add_parser("invariance", help="randomized invariance suite")
    v.add_argument("--def", dest="def_id", type=int, choices=(1, 2, 3), required=True)
    v.add_argument("--trials", type=_positive, default=10)
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--tol", type=float, default=1e-6)
    v.add_argument("--ell", type=_nonneg, default=0)
    v.add_argument("--laurent-depth", type=_nonneg, default=1)
    v.add_argument("--restrict", type=_restrict, default=(), help="'auto' or a list like g100,g300")
    v.add_argument("--functions-per-trial", type=_positive, default=5)
    v.add_argument("--eps", type=float, default=0.1)
    v.add_argument("--only", help="comma-separated slot names (definition 3)")
    v.add_argument("--keep-a11", action="store_true")
    v.add_argument("--order", type=_positive, default=32)
    v.add_argument("--panels", type=_positive, default=16)
    add_report(v)
    return p


def _result_report(res: IntegralResult) -> dict:
    out = {
        "canonicalTerm": to_text(res.canonical_term),
        "obstructions": [o.as_dict() for o in res.obstructions],
        "numericValue": res.numeric_value,
        "verdict": "well-defined" if res.well_defined else "obstructed",
        "warnings": list(res.warnings),
    }
    if res.divergence is not None:
        out["currents"] = [to_text(j) for j in res.divergence]
        out["totalDerivative"] = to_text(res.total_derivative)
    return out


def cmd_ber(args) -> tuple[dict, int]:
    T = io.load_transform(args.transform)
    out: dict = {}
    if args.mode in ("closed", "both"):
        closed = ber_closed(T).normalized()
        out.update(body=to_text(closed.body), soul=to_text(closed.soul))
    if args.mode in ("direct", "both"):
        direct = ber_direct(jacobian(T)).normalized()
        out.update(directBody=to_text(direct.body), directSoul=to_text(direct.soul))
        if args.mode == "direct":
            out.update(body=out["directBody"], soul=out["directSoul"])
    if args.mode == "both":
        out["verdict"] = "equal" if closed.equals(direct) else "different"
    code = EXIT_OK if out.get("verdict", "equal") == "equal" else EXIT_NUMERIC
    return out, code


def cmd_integrate(args) -> tuple[dict, int]:
    T = io.load_transform(args.transform) if args.transform else None
    if args.def_id == 3:
        parsed = io.load_function(args.function)
        if parsed.function.reduced is False:
            parsed = io.ParsedFunction(parsed.function.reduce(), parsed.env)
        res = integrate_def3(
            parsed.function,
            parsed.env,
            T,
            domain=args.domain,
            order=args.order,
            panels=args.panels,
            keep_a11=args.keep_a11,
        )
    else:
        if T is None:
            raise io.InvalidInput("definitions 1 and 2 need --transform")
        depth = args.laurent_depth if args.def_id == 2 else 0
        trunc = args.trunc
        if trunc is None and args.function == "generic":
            trunc = args.ell + 1 if args.def_id == 1 else max(1 - args.ell, 0)
        parsed = io.load_function(args.function, trunc=trunc, laurent_depth=depth)
        # a numeric value needs explicit transform functions and bound components
        env = parsed.env if parsed.numeric and parsed.env and not _generic(T) else None
        run = integrate_def1 if args.def_id == 1 else integrate_def2
        res = run(parsed.function, T, args.ell, env)
    report = _result_report(res)
    return report, EXIT_OK if res.well_defined else EXIT_OBSTRUCTED


def _generic(T) -> bool:
    return any(function_atoms(e) for e in T.as_dict().values())


def cmd_constraints(args) -> tuple[dict, int]:
    names = sorted(constraints_def1(args.ell).vanishing, key=lambda n: (component_index(n)[1:], component_index(n)[0]))
    return {"vanishing": names}, EXIT_OK


def cmd_invariance(args) -> tuple[dict, int]:
    only = [s.strip() for s in args.only.split(",")] if args.only else None
    rep = invariance_suite(
        args.def_id,
        args.trials,
        args.seed,
        args.tol,
        ell=args.ell,
        laurent_depth=args.laurent_depth,
        restrict=args.restrict,
        functions_per_trial=args.functions_per_trial,
        eps=args.eps,
        only=only,
        keep_a11=args.keep_a11,
        order=args.order,
        panels=args.panels,
    )
    out = rep.as_dict()
    out["verdict"] = "pass" if rep.all_passed else "fail"
    return out, EXIT_OK if rep.all_passed else EXIT_OBSTRUCTED


COMMANDS = {"ber": cmd_ber, "integrate": cmd_integrate, "constraints": cmd_constraints, "invariance": cmd_invariance}


def _config(args) -> dict:
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in ("command", "report"):
            continue
        cfg[k] = str(v) if isinstance(v, Path) else (list(v) if isinstance(v, tuple) else v)
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    report: dict = {"command": args.command, "config": _config(args)}
    try:
        body, code = COMMANDS[args.command](args)
        report.update(body)
    except NUMERIC as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_NUMERIC
    except INVALID as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_INVALID
    report["exitCode"] = code
    text = io.dumps(report)
    sys.stdout.write(text)
    if args.report is not None:
        args.report.write_text(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
