"""Command-line interface: ``streamverify verify|check-trace|dump-smt|graph``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Sequence

from . import __version__
from .analysis import build_graph, check_well_formed, compute_window
from .errors import EvaluationError, SpecError
from .frontend import load_spec
from .frontend.ast import Specification
from .interpreter import AnnotationVerdict, Evaluator, Trace, format_value
from .obligations import (
    FINITE_MODES, div_obligations, finite_obligation, inductive_obligations, inductive_verdict,
)
from .pipeline import VerificationReport, smt_check_annotations, verify
from .solver import (
    AlgebraicValue, CheckResult, CounterModel, QueryError, SolverConfig, check, render_counterexample,
)

EXIT_OK, EXIT_REFUTED, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2, 3
VERDICT_EXIT = {"verified": EXIT_OK, "refuted": EXIT_REFUTED, "unknown": EXIT_UNKNOWN}


class UsageError(Exception):
    pass


def _constants(pairs: Sequence[str]) -> dict[str, str]:
    out = {}
    for p in pairs or ():
        name, sep, value = p.partition("=")
        if not sep or not name.strip() or not value.strip():
            raise UsageError(f"--const expects NAME=VALUE, got {p!r}")
        out[name.strip()] = value.strip()
    return out


def _load(path: str, consts: Sequence[str]) -> Specification:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    spec = load_spec(text, _constants(consts))
    check_well_formed(build_graph(spec))
    return spec


def _solver_config(args) -> SolverConfig:
    if args.timeout <= 0:
        raise UsageError("--timeout must be positive")
    return SolverConfig(executable=args.solver or "", timeout=args.timeout)


def _value(v) -> str:
    return str(v) if isinstance(v, AlgebraicValue) else format_value(v)


def _model_json(cm: CounterModel, spec: Specification) -> dict:
    names = spec.input_names + spec.output_names
    return {
        "failed": list(cm.failed),
        "goal_positions": list(cm.goal_positions),
        "rows": [
            {
                "position": j,
                "values": {n: _value(cm.values[n, j]) for n in names},
                "flags": {n: cm.flags[n, j] for n in names},
            }
            for j in range(cm.N + 1)
        ],
    }


def _result_json(r: CheckResult, spec: Specification) -> dict:
    ob = r.obligation
    p = ob.params
    return {
        "name": ob.name,
        "kind": ob.kind,
        "N": ob.N,
        "status": r.status,
        "reason": r.reason,
        "elapsed": round(r.elapsed, 6),
        "positions": None if p is None else {
            "assumed": sorted(p.assumed), "asserted": sorted(p.asserted),
            "streams": sorted(p.streams), "goal": sorted(p.goal),
        },
        "counterexample": _model_json(r.model, spec) if r.model is not None else None,
    }


def _emit(obj: dict) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _print_results(results: list[CheckResult], spec: Specification, out) -> None:
    width = max((len(r.obligation.name) for r in results), default=0)
    for r in results:
        line = f"  {r.obligation.name.ljust(width)}  N={r.obligation.N:<3} {r.status:<8} {r.elapsed:6.2f}s"
        if r.reason:
            line += f"  ({r.reason})"
        print(line, file=out)
    for r in results:
        if r.model is not None:
            print(file=out)
            out.write(render_counterexample(r.model, spec))
        elif r.status == "unknown" and r.raw:
            print(f"\nraw solver output for {r.obligation.name}:\n{r.raw.rstrip()}", file=out)


def cmd_verify(args) -> int:
    start = time.monotonic()
    spec = _load(args.spec, args.const)
    cfg = _solver_config(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.finite is not None:
        if args.finite < 0:
            raise UsageError("--finite expects N >= 0")
        results = [check(finite_obligation(spec, args.finite, args.finite_mode), cfg)]
        report = VerificationReport(compute_window(spec), results, inductive_verdict(r.status for r in results))
        mode = f"finite-{args.finite_mode}"
    else:
        report = verify(spec, cfg, args.jobs, args.check_div, args.check_vacuity)
        mode = "inductive"
    report.elapsed = time.monotonic() - start
    code = VERDICT_EXIT[report.verdict]
    if args.json:
        _emit({
            "tool": "streamverify", "version": __version__, "command": "verify",
            "spec": args.spec, "mode": mode, "verdict": report.verdict, "exit_code": code,
            "window": {"past": report.window.past, "future": report.window.future},
            "obligations": [_result_json(r, spec) for r in report.results],
            "vacuity": [_result_json(r, spec) for r in report.vacuity],
            "warnings": report.warnings, "elapsed": round(report.elapsed, 6),
        })
        return code
    out = sys.stdout
    print(f"spec: {args.spec}", file=out)
    print(f"window: past={report.window.past} future={report.window.future}  mode: {mode}", file=out)
    _print_results(report.results, spec, out)
    for w in report.warnings:
        print(f"warning: {w}", file=out)
    print(f"{report.valid_count}/{len(report.results)} obligations valid", file=out)
    print(report.verdict.upper(), file=out)
    return code


def cmd_check_trace(args) -> int:
    spec = _load(args.spec, args.const)
    try:
        with open(args.trace, encoding="utf-8", newline="") as fh:
            trace = Trace.from_csv(fh, spec)
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc.strerror or exc}") from exc
    triggers = None
    if args.mode == "interpret":
        result = Evaluator(spec, exact=args.exact).evaluate(trace)
        verdicts = {a: AnnotationVerdict(a, result.assumptions[a], result.assertions[a]) for a in spec.identifiers}
        triggers = result.triggers
    else:
        try:
            verdicts = smt_check_annotations(spec, trace, _solver_config(args))
        except QueryError as exc:
            print(f"error: solver failure: {exc}", file=sys.stderr)
            return EXIT_UNKNOWN
    violated = [v for v in verdicts.values() if not v.respected]
    code = EXIT_REFUTED if violated else EXIT_OK
    if args.json:
        _emit({
            "tool": "streamverify", "version": __version__, "command": "check-trace",
            "spec": args.spec, "trace": args.trace, "mode": args.mode,
            "verdict": "violated" if violated else "respected", "exit_code": code,
            "length": trace.length,
            "annotations": [
                {"id": v.alpha, "respected": v.respected, "violations": v.violations,
                 "assumption": v.assumption_holds, "assertion": v.assertion_holds}
                for v in verdicts.values()
            ],
            "triggers": None if triggers is None else [{"position": j, "message": m} for j, m in triggers],
        })
        return code
    print(f"trace: {args.trace} ({trace.length} positions, mode {args.mode})")
    for v in verdicts.values():
        if v.respected:
            print(f"  <{v.alpha}> respected")
        else:
            print(f"  <{v.alpha}> violated at position(s) {', '.join(map(str, v.violations))}")
    if triggers:
        for j, m in triggers:
            print(f"  position {j}: {m}")
    print("VIOLATED" if violated else "RESPECTED")
    return code


def cmd_dump_smt(args) -> int:
    spec = _load(args.spec, args.const)
    window = compute_window(spec)
    obligations = inductive_obligations(spec, window)
    if args.check_div:
        obligations += div_obligations(spec, window)
    for n in args.finite or ():
        if n < 0:
            raise UsageError("--finite expects N >= 0")
        obligations.append(finite_obligation(spec, n, args.finite_mode))
    out = Path(args.outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for ob in obligations:
            (out / f"{ob.name}.smt2").write_text(ob.script(args.logic), encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc.strerror or exc}") from exc
    print(f"wrote {len(obligations)} files to {out}")
    return EXIT_OK


def cmd_graph(args) -> int:
    spec = load_spec(_read(args.spec), _constants(args.const))
    sys.stdout.write(build_graph(spec).to_dot())
    return EXIT_OK


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="streamverify", description="Verify assume/assert annotations of stream specifications.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, solver=True):
        sp.add_argument("spec", help="specification file")
        sp.add_argument("--const", action="append", default=[], metavar="NAME=VALUE",
                        help="bind a named constant used in the specification")
        if solver:
            sp.add_argument("--solver", metavar="PATH", help="SMT solver executable (default: $STREAMVERIFY_SOLVER or z3)")
            sp.add_argument("--timeout", type=float, default=60.0, help="seconds per solver query (default 60)")

    v = sub.add_parser("verify", help="prove the assertions inductively")
    common(v)
    v.add_argument("--check-div", action="store_true", help="also prove every divisor nonzero")
    v.add_argument("--check-vacuity", action="store_true", help="warn when the hypotheses are unsatisfiable")
    v.add_argument("--jobs", type=int, default=1, help="parallel solver sessions")
    v.add_argument("--finite", type=int, metavar="N", help="check executions of length N+1 instead")
    v.add_argument("--finite-mode", choices=FINITE_MODES, default="global")
    v.add_argument("--json", action="store_true", help="machine-readable summary on stdout")
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("check-trace", help="check the annotations on a CSV trace")
    common(t)
    t.add_argument("trace", help="CSV file with one column per input")
    t.add_argument("--mode", choices=("interpret", "smt"), default="interpret")
    t.add_argument("--exact", action="store_true", help="exact rational arithmetic in the interpreter")
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_check_trace)

    d = sub.add_parser("dump-smt", help="write one SMT-LIB 2 script per obligation")
    common(d, solver=False)
    d.add_argument("outdir")
    d.add_argument("--check-div", action="store_true")
    d.add_argument("--finite", type=int, action="append", metavar="N", help="also dump finite_N{N}.smt2 (repeatable)")
    d.add_argument("--finite-mode", choices=FINITE_MODES, default="global")
    d.add_argument("--logic", default="QF_UFNIRA")
    d.set_defaults(func=cmd_dump_smt)

    g = sub.add_parser("graph", help="print the dependency graph as DOT")
    common(g, solver=False)
    g.set_defaults(func=cmd_graph)
    return p


def _error_json(args, kind: str, message: str, span=None) -> None:
    _emit({
        "tool": "streamverify", "version": __version__, "command": getattr(args, "command", None),
        "spec": getattr(args, "spec", None), "verdict": "error", "exit_code": EXIT_ERROR,
        "error": {"kind": kind, "message": message,
                  "line": span.line if span else None, "column": span.column if span else None},
    })


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    want_json = getattr(args, "json", False)
    try:
        return args.func(args)
    except SpecError as exc:
        where = f"{args.spec}:{exc.span}" if exc.span else args.spec
        if isinstance(exc, EvaluationError):
            where = getattr(args, "trace", args.spec)
        if want_json:
            _error_json(args, type(exc).__name__, exc.message, exc.span)
        else:
            print(f"{where}: error: {exc.message}", file=sys.stderr)
        return EXIT_ERROR
    except UsageError as exc:
        if want_json:
            _error_json(args, "UsageError", str(exc))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
