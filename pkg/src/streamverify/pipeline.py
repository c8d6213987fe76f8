"""End-to-end checks: inductive verification and solver-backed trace replay."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .analysis import UnfoldingWindow, build_graph, check_well_formed, compute_window
from .encoder import UNINTERPRETED, smt_rational
from .errors import EvaluationError
from .frontend.ast import Specification
from .interpreter import AnnotationVerdict, Trace
from .obligations import (
    ProofObligation, _equations, div_obligations, finite_obligation, inductive_obligations,
    inductive_verdict, vacuity_obligations,
)
from .solver import CheckResult, QueryError, SolverConfig, check, query_values


@dataclass
class VerificationReport:
    window: UnfoldingWindow
    results: list[CheckResult]
    verdict: str
    vacuity: list[CheckResult] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def valid_count(self) -> int:
        return sum(r.valid for r in self.results)

    def failed(self) -> list[CheckResult]:
        return [r for r in self.results if not r.valid]


def run_obligations(obligations: list[ProofObligation], cfg: SolverConfig, jobs: int = 1) -> list[CheckResult]:
    if jobs <= 1 or len(obligations) <= 1:
        return [check(ob, cfg) for ob in obligations]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda ob: check(ob, cfg), obligations))


def plan(spec: Specification, check_div: bool = False) -> list[ProofObligation]:
    check_well_formed(build_graph(spec))
    window = compute_window(spec)
    obligations = inductive_obligations(spec, window)
    if check_div:
        obligations += div_obligations(spec, window)
    return obligations


def verify(spec: Specification, cfg: SolverConfig | None = None, jobs: int = 1,
           check_div: bool = False, check_vacuity: bool = False) -> VerificationReport:
    cfg = cfg or SolverConfig()
    start = time.monotonic()
    obligations = plan(spec, check_div)
    results = run_obligations(obligations, cfg, jobs)
    report = VerificationReport(compute_window(spec), results, inductive_verdict(r.status for r in results))
    if not spec.identifiers:
        report.warnings.append("no assume/assert annotations: verified vacuously")
    if check_vacuity:
        report.vacuity = run_obligations(vacuity_obligations(spec, report.window), cfg, jobs)
        for r in report.vacuity:
            if r.valid:
                alpha = r.obligation.clauses[0].alpha
                report.warnings.append(
                    f"hypotheses of <{alpha}> are unsatisfiable in the run window: its proof is vacuous")
            elif r.status == "unknown":
                report.warnings.append(f"vacuity check for {r.obligation.name} inconclusive: {r.reason}")
    report.elapsed = time.monotonic() - start
    return report


def check_finite(spec: Specification, N: int, cfg: SolverConfig | None = None,
                 mode: str = "global") -> CheckResult:
    return check(finite_obligation(spec, N, mode), cfg or SolverConfig())


_PY_FUNCTIONS = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "arctan": math.atan}


class TraceQuery:
    """Solver model of a specification with every input fixed to a trace.

    Uninterpreted transcendental functions are pinned, point by point,
    to the floating-point value at the concrete arguments the model
    produces.
    """

    MAX_ROUNDS = 32

    def __init__(self, spec: Specification, trace: Trace, cfg: SolverConfig | None = None):
        self.spec = spec
        self.cfg = cfg or SolverConfig()
        self.n = trace.length
        self.obligation = finite_obligation(spec, self.n - 1, "pointwise", inputs=trace.columns)
        self.encoder = self.obligation.encoder
        self.equations = _equations(self.encoder, spec, range(self.n))
        self.pins: dict[tuple[str, Fraction], str] = {}

    def _script(self) -> str:
        ob = self.obligation
        lines = ["(set-option :produce-models true)", f"(set-logic {self.cfg.logic})"]
        lines += ob.universe.declarations() + self.encoder.function_declarations()
        lines += [f"(assert {f})" for f in ob.all_facts() + self.equations + list(self.pins.values())]
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n"

    def values(self, terms: list[str]) -> list[object]:
        """Model values of ``terms`` after all transcendental applications are pinned.

        A square root of a negative argument has no value to pin.  It is
        tolerated only when ``terms`` do not depend on it (an untaken
        branch); otherwise it is an evaluation error.
        """
        for _ in range(self.MAX_ROUNDS):
            apps = sorted(self.encoder.uf_terms.items())
            args = [term[len(UNINTERPRETED[fn]) + 2:-1] for term, fn in apps]
            got = query_values(self._script(), args + terms, self.cfg)
            fresh = False
            negative = []
            for (term, fn), arg in zip(apps, got[:len(args)]):
                if not isinstance(arg, (int, Fraction)):
                    raise QueryError(f"non-rational argument {arg} for {fn}")
                key = (fn, Fraction(arg))
                if key in self.pins:
                    continue
                x = float(arg)
                if fn == "sqrt" and x < 0:
                    # possibly an artefact of applications not pinned yet
                    negative.append((term, x))
                    continue
                y = Fraction(_PY_FUNCTIONS[fn](x))
                self.pins[key] = f"(= ({UNINTERPRETED[fn]} {smt_rational(Fraction(arg))}) {smt_rational(y)})"
                fresh = True
            if fresh:
                continue
            result = got[len(args):]
            if negative and self._depends_on(negative, terms, result):
                raise EvaluationError(f"sqrt of negative value {negative[0][1]}", "<smt>", -1)
            return result
        raise QueryError("transcendental arguments did not stabilise")

    def _depends_on(self, negative, terms, result) -> bool:
        """Whether forcing the unpinnable applications elsewhere changes ``result``."""
        apps = [t for t, _ in negative]
        current = query_values(self._script(), apps, self.cfg)
        moved = [f"(= {t} {smt_rational(Fraction(v) + 1)})" for t, v in zip(apps, current)]
        script = self._script().replace("(check-sat)", "\n".join(f"(assert {m})" for m in moved) + "\n(check-sat)")
        return query_values(script, terms, self.cfg) != result

    def output_values(self) -> dict[str, list]:
        uni = self.obligation.universe
        names = self.spec.output_names
        terms = [uni.var(name, j) for name in names for j in range(self.n)]
        vals = iter(self.values(terms))
        return {name: [next(vals) for _ in range(self.n)] for name in names}

    def annotation_verdicts(self) -> dict[str, AnnotationVerdict]:
        spec, enc, n = self.spec, self.encoder, self.n
        terms, index = [], []
        for d in spec.outputs:
            for j in range(n):
                for cond in enc.div_side_conditions(d.expr, j):
                    terms.append(cond)
                    index.append(("div", d.name, j))
        for alpha in spec.identifiers:
            for kind, formulas in (("assume", spec.assume(alpha)), ("assert", spec.assert_(alpha))):
                for j in range(n):
                    terms.append(_conj_terms([enc.encode(f, j) for f in formulas]))
                    index.append((kind, alpha, j))
        vals = self.values(terms)
        tables = {(k, a): [True] * n for k in ("assume", "assert") for a in spec.identifiers}
        for (kind, who, j), v in zip(index, vals):
            if kind == "div":
                if v is False:
                    raise EvaluationError("division by zero", who, j)
                continue
            tables[kind, who][j] = v is True
        return {a: AnnotationVerdict(a, tables["assume", a], tables["assert", a]) for a in spec.identifiers}


def _conj_terms(ts: list[str]) -> str:
    if not ts:
        return "true"
    return ts[0] if len(ts) == 1 else "(and " + " ".join(ts) + ")"


def smt_check_annotations(spec: Specification, trace: Trace,
                          cfg: SolverConfig | None = None) -> dict[str, AnnotationVerdict]:
    """Per-identifier verdicts from the finite-execution formula with the inputs fixed.

    Validity of that formula is checked too and must agree with the
    per-position tables read from the model.
    """
    if trace.length == 0:
        return {a: AnnotationVerdict(a, [], []) for a in spec.identifiers}
    q = TraceQuery(spec, trace, cfg)
    verdicts = q.annotation_verdicts()
    ob = q.obligation
    ob.facts = ob.facts + list(q.pins.values())
    result = check(ob, q.cfg, split=False)
    if result.status == "unknown":
        raise QueryError(f"finite obligation undecided: {result.reason}")
    respected = all(v.respected for v in verdicts.values())
    if result.valid != respected:
        raise QueryError("solver validity disagrees with the evaluated annotation tables")
    return verdicts


def smt_output_values(spec: Specification, trace: Trace, cfg: SolverConfig | None = None) -> dict[str, list]:
    if trace.length == 0:
        return {name: [] for name in spec.output_names}
    return TraceQuery(spec, trace, cfg).output_values()
