"""Command-line front end.

Subcommands: ``analyze``, ``eval``, ``simulate``, ``kleene``, ``check``.
Exit codes: 0 ok, 1 parse/validation (including arity mismatches), 2
precision failure, 3 I/O, 4 failed verification checks.  The environment
variable ``CPRT_PRECISION`` overrides the default working precision.

JSON reports are byte-stable across runs for identical inputs and flags;
stage timings therefore only appear in the human-readable output.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from fractions import Fraction

import mpmath as mp

from . import checks as checks_mod
from . import oracles
from .errors import CprtError, NotPastError, ParseError, PrecisionError, ResourceError, ValidationError
from .exact import (
    DEFAULT_PRECISION,
    AnalysisResult,
    analyze_cp,
    closed_form_to_dict,
    evaluate,
    pretty_closed_form,
)
from .parser import parse_program
from .program import CpProgram, pretty
from .reduction import to_random_walk
from .termination import VerdictKind

DISPLAY_DIGITS = 6
PAPER_DIGITS = 2


def _default_precision() -> int:
    env = os.environ.get("CPRT_PRECISION")
    if env:
        try:
            return max(10, int(env))
        except ValueError:
            raise ValidationError(f"CPRT_PRECISION must be an integer, got {env!r}")
    return DEFAULT_PRECISION


def _load(path: str) -> CpProgram:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_program(handle.read())


def _digest(prog: CpProgram) -> str:
    return "sha256:" + hashlib.sha256(pretty(prog).encode("utf-8")).hexdigest()


def _parse_at(text: str, arity: int) -> tuple[int, ...]:
    try:
        values = tuple(int(part.strip()) for part in text.split(","))
    except ValueError:
        raise ValidationError(f"--at expects comma-separated integers, got {text!r}")
    if len(values) != arity:
        raise ValidationError(f"--at has arity {len(values)}, program has arity {arity}")
    return values


def _frac(value: Fraction | None) -> str | None:
    return None if value is None else str(value)


def _verdict_dict(result: AnalysisResult) -> dict:
    v = result.verdict
    return {
        "kind": v.kind.value,
        "reason": v.reason.value,
        "drift": _frac(v.drift),
        "trivial_case": v.trivial_case.value if v.trivial_case else None,
    }


def _bounds_dict(result: AnalysisResult) -> dict | None:
    b = result.bounds
    if b is None:
        return None
    return {
        "lower": {"slope": str(b.lower_slope), "intercept": str(b.lower_intercept)},
        "upper": {"slope": str(b.upper_slope), "intercept": str(b.upper_intercept)},
    }


def _walk_dict(result: AnalysisResult) -> dict:
    walk = result.walk
    return {
        "m": walk.m,
        "k": walk.k,
        "probs": {str(j): str(walk.probs[j]) for j in sorted(walk.probs, reverse=True)},
        "direct_prob": str(walk.direct_prob),
        "reset_target": walk.reset_target,
    }


def _emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2) + "\n")


def _num(value, digits: int) -> str:
    with mp.workdps(digits + 10):
        if isinstance(value, Fraction):
            value = mp.mpf(value.numerator) / mp.mpf(value.denominator)
        return mp.nstr(mp.mpf(value), digits, strip_zeros=True)


def _display(value, digits: int) -> str:
    """Human form: significant-digit rounding, plain decimal at moderate sizes."""
    f = float(value)
    if f == 0:
        return "0"
    rounded = round(f, digits - 1 - math.floor(math.log10(abs(f))))
    return f"{rounded:g}"


def cmd_analyze(args) -> int:
    prog = _load(args.path)
    timings: dict = {}
    result = analyze_cp(prog, precision=args.precision, timings=timings)
    report = {
        "command": "analyze",
        "program": args.path,
        "digest": _digest(prog),
        "precision_digits": args.precision,
        "verdict": _verdict_dict(result),
        "bounds": _bounds_dict(result),
        "rdw": {"a": list(result.rdw.guard_a), "b": result.rdw.guard_b},
        "closed_form": closed_form_to_dict(result.closed_form, result.rdw)
        if result.closed_form else None,
    }
    if args.emit_rdw:
        report["reduced"] = _walk_dict(result)
    if args.json:
        _emit(report)
        return 0
    digits = PAPER_DIGITS if args.paper_format else args.display
    print(f"program : {args.path}")
    print(f"digest  : {report['digest']}")
    verdict_note = result.verdict.reason.value
    if result.verdict.trivial_case is not None:
        verdict_note += f", {result.verdict.trivial_case.value}"
    print(f"verdict : {result.verdict.kind.value} ({verdict_note})")
    if result.verdict.drift is not None:
        print(f"drift   : {result.verdict.drift}")
    if result.bounds is not None:
        b = result.bounds
        print(f"bounds  : {b.lower_slope}*x + {b.lower_intercept} <= rt <= "
              f"{b.upper_slope}*x + {b.upper_intercept}")
    if args.emit_rdw:
        print("reduced walk:")
        print("  " + pretty(result.walk.as_cp_program()).replace("\n", "\n  ").rstrip())
    if result.closed_form is not None:
        print("closed form (x = " + result.rdw.expression(prog.var_names) + "):")
        print("  " + pretty_closed_form(result.closed_form, digits=digits))
    print("timings : " + ", ".join(f"{k} {v:.2f} ms" for k, v in timings.items()))
    return 0


def cmd_eval(args) -> int:
    prog = _load(args.path)
    at = _parse_at(args.at, prog.arity)
    result = analyze_cp(prog, precision=args.precision)
    x = result.rdw.apply(at)
    if x <= 0:
        value, text = mp.mpf(0), "0"
    elif result.closed_form is not None:
        value = evaluate(result.closed_form, x)
        text = _num(value, args.precision)
    else:
        value, text = None, "inf"
    report = {
        "command": "eval",
        "program": args.path,
        "digest": _digest(prog),
        "precision_digits": args.precision,
        "at": list(at),
        "rdw_value": x,
        "verdict": _verdict_dict(result),
        "expected_runtime": text,
        "nearest_int": int(mp.floor(value + mp.mpf("0.5"))) if value is not None else None,
    }
    if args.json:
        _emit(report)
        return 0
    if value is None:
        print("expected runtime: inf")
    else:
        digits = PAPER_DIGITS if args.paper_format else args.display
        print(f"expected runtime: {_display(value, digits)}   "
              f"(nearest integer {report['nearest_int']})")
    return 0


def cmd_simulate(args) -> int:
    prog = _load(args.path)
    at = _parse_at(args.at, prog.arity)
    est = oracles.simulate(prog, at, trials=args.trials, step_cap=args.cap, seed=args.seed)
    mean = None if est.mean != est.mean else est.mean  # NaN -> null
    report = {
        "command": "simulate",
        "program": args.path,
        "digest": _digest(prog),
        "at": list(at),
        "trials": est.trials,
        "seed": est.seed,
        "step_cap": est.step_cap,
        "mean": mean,
        "half_width_95": None if mean is None else est.half_width_95,
        "censored": est.censored,
    }
    if args.json:
        _emit(report)
        return 0
    if mean is None:
        print(f"all {est.trials} trials censored at the step cap {est.step_cap}")
    else:
        print(f"mean termination time {est.mean:.6f} +- {est.half_width_95:.6f} "
              f"(95% CI, {est.trials} trials, {est.censored} censored)")
    return 0


def cmd_kleene(args) -> int:
    prog = _load(args.path)
    at = _parse_at(args.at, prog.arity)
    walk, rdw = to_random_walk(prog)
    x0 = rdw.apply(at)
    if args.iterations:
        value = oracles.kleene_iterate(walk, x0, args.iterations, precision=args.precision)
        iterations, converged, increment = args.iterations, None, None
    else:
        conv = oracles.kleene_converge(walk, x0, increment_tol=args.tol,
                                       max_n=args.max_iterations, precision=args.precision)
        value, iterations, converged = conv.value, conv.iterations, conv.converged
        increment = _num(conv.last_increment, 6) if x0 > 0 else "0"
    report = {
        "command": "kleene",
        "program": args.path,
        "digest": _digest(prog),
        "precision_digits": args.precision,
        "at": list(at),
        "x0": x0,
        "iterations": iterations,
        "converged": converged,
        "last_increment": increment,
        "value": _num(value, args.precision) if x0 > 0 else "0",
    }
    if args.json:
        _emit(report)
        return 0
    print(f"fixpoint iterate at x0 = {x0}: {_num(value, args.display) if x0 > 0 else 0} "
          f"after {iterations} iterations (lower bound on the expected runtime)")
    return 0


def cmd_check(args) -> int:
    prog = _load(args.path)
    result = analyze_cp(prog, precision=args.precision)
    if result.verdict.kind != VerdictKind.PAST:
        raise NotPastError(
            f"check requires a PAST program, verdict is {result.verdict.kind.value}"
        )
    x0 = result.rdw.apply(_parse_at(args.at, prog.arity)) if args.at else 1
    report = checks_mod.run_checks(result, kleene_x0=max(x0, 1),
                                   kleene_value_tol=1e-4, kleene_max_n=args.depth)
    if args.json:
        _emit({
            "command": "check",
            "program": args.path,
            "digest": _digest(prog),
            "precision_digits": args.precision,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail}
                for c in report.checks
            ],
            "all_passed": report.all_passed,
        })
    else:
        for c in report.checks:
            print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
    return 0 if report.all_passed else 4


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="cprt",
        description="Termination and exact expected-runtime analysis for "
                    "constant-probability loop programs",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, at_required=False):
        p.add_argument("path", help="program source file")
        p.add_argument("--precision", type=int, default=None,
                       help="working precision in decimal digits (default 50, "
                            "or CPRT_PRECISION)")
        p.add_argument("--json", action="store_true", help="emit a JSON report")
        p.add_argument("--display", type=int, default=DISPLAY_DIGITS,
                       help="significant digits in human output")
        if at_required is not None:
            p.add_argument("--at", required=at_required,
                           help="comma-separated initial values, e.g. 1000,0")

    p = sub.add_parser("analyze", help="verdict, bounds, and closed form")
    common(p, at_required=None)
    p.add_argument("--emit-rdw", action="store_true", help="include the reduced walk")
    p.add_argument("--paper-format", action="store_true",
                   help="round human output to 2 significant digits")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("eval", help="expected runtime at concrete initial values")
    common(p, at_required=True)
    p.add_argument("--paper-format", action="store_true",
                   help="round human output to 2 significant digits")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="seeded Monte-Carlo estimate")
    common(p, at_required=True)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=1_000_000, help="step cap per trial")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("kleene", help="fixpoint-iteration lower bound")
    common(p, at_required=True)
    p.add_argument("--iterations", type=int, default=0,
                   help="fixed iteration count (default: iterate to convergence)")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="per-iteration increment threshold for convergence")
    p.add_argument("--max-iterations", type=int, default=100_000)
    p.set_defaults(func=cmd_kleene)

    p = sub.add_parser("check", help="verification suite against the closed form")
    common(p, at_required=False)
    p.add_argument("--depth", type=int, default=100_000,
                   help="iteration budget for the fixpoint sandwich check")
    p.set_defaults(func=cmd_check)
    return top


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    # join "--at -5,3" so argparse does not mistake the value for an option
    merged, skip = [], False
    for i, token in enumerate(argv):
        if skip:
            skip = False
            continue
        if token == "--at" and i + 1 < len(argv):
            merged.append("--at=" + argv[i + 1])
            skip = True
        else:
            merged.append(token)
    args = _build_parser().parse_args(merged)
    try:
        if args.precision is None:
            args.precision = _default_precision()
        return args.func(args)
    except (ParseError, ValidationError, NotPastError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PrecisionError as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ResourceError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 1
    except CprtError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
