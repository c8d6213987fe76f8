"""Proof obligations: the unfolding template and its Begin/Run/End instances.

Every obligation is a conjunction of clauses ``hypotheses -> goals``;
it is valid iff each clause is.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .analysis import UnfoldingWindow, compute_window
from .encoder import Encoder, smt_literal
from .frontend.ast import Apply, Expr, Specification, walk


@dataclass(frozen=True)
class TemplateParams:
    assumed: frozenset[int]
    asserted: frozenset[int]
    streams: frozenset[int]
    goal: frozenset[int]

    @classmethod
    def of(cls, assumed: Iterable[int], asserted: Iterable[int], streams: Iterable[int], goal: Iterable[int]):
        return cls(frozenset(assumed), frozenset(asserted), frozenset(streams), frozenset(goal))

    def describe(self) -> str:
        def fmt(s):
            return "{" + ",".join(map(str, sorted(s))) + "}"
        return (f"asm={fmt(self.assumed)} asserted={fmt(self.asserted)} "
                f"streams={fmt(self.streams)} goal={fmt(self.goal)}")


@dataclass
class Clause:
    label: str
    alpha: str | None
    hypotheses: list[str]
    goals: list[tuple[int, str]]  # (position, formula)


@dataclass
class ProofObligation:
    kind: str  # begin | run | end | finite | divcheck | vacuity
    N: int
    name: str
    clauses: list[Clause]
    encoder: Encoder
    params: TemplateParams | None = None
    facts: list[str] = field(default_factory=list)
    note: str = ""

    @property
    def universe(self):
        return self.encoder.universe

    @property
    def goal_positions(self) -> list[int]:
        return sorted({p for c in self.clauses for p, _ in c.goals})

    def formula(self) -> str:
        """The closed formula whose validity is the obligation."""
        parts = [f"(=> {_conj(c.hypotheses)} {_conj([g for _, g in c.goals])})" for c in self.clauses]
        return _conj(parts)

    def all_facts(self) -> list[str]:
        return self.universe.side_constraints() + self.encoder.range_axioms() + self.facts

    def script(self, logic: str = "QF_UFNIRA") -> str:
        """SMT-LIB 2 script asserting the negated obligation, ending in check-sat."""
        lines = [
            f"; obligation {self.name}: kind={self.kind} N={self.N}",
        ]
        if self.params is not None:
            lines.append(f"; {self.params.describe()}")
        if self.note:
            lines.append(f"; {self.note}")
        lines += ["(set-option :produce-models true)", f"(set-logic {logic})"]
        lines += self.universe.declarations()
        lines += self.encoder.function_declarations()
        body = []
        for k, c in enumerate(self.clauses):
            body.append(f"(declare-const {hyp_symbol(k)} Bool)")
            body.append(f"(assert (= {hyp_symbol(k)} {_conj(c.hypotheses)}))")
            for pos, g in c.goals:
                body.append(f"(declare-const {goal_symbol(k, pos)} Bool)")
                body.append(f"(assert (= {goal_symbol(k, pos)} {g}))")
        lines += body
        lines += [f"(assert {f})" for f in self.all_facts()]
        implications = [
            f"(=> {hyp_symbol(k)} {_conj([goal_symbol(k, p) for p, _ in c.goals])})"
            for k, c in enumerate(self.clauses)
        ]
        lines.append(f"(assert (not {_conj(implications)}))")
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n"

    def restricted(self, k: int) -> "ProofObligation":
        """The same obligation reduced to its k-th clause."""
        return replace(self, clauses=[self.clauses[k]])

    def indicator_symbols(self) -> list[str]:
        out = []
        for k, c in enumerate(self.clauses):
            out.append(hyp_symbol(k))
            out += [goal_symbol(k, p) for p, _ in c.goals]
        return out


def hyp_symbol(k: int) -> str:
    return f"|hyp!{k}|"


def goal_symbol(k: int, pos: int) -> str:
    return f"|goal!{k}!{pos}|"


def _conj(terms: Sequence[str]) -> str:
    if not terms:
        return "true"
    if len(terms) == 1:
        return terms[0]
    return "(and " + " ".join(terms) + ")"


def _equations(enc: Encoder, spec: Specification, positions: Iterable[int]) -> list[str]:
    return [enc.equation(d.name, i) for i in sorted(positions) for d in spec.outputs]


def _annotations(enc: Encoder, formulas: list[Expr], positions: Iterable[int]) -> list[str]:
    return [enc.encode(f, i) for i in sorted(positions) for f in formulas]


def instantiate_template(spec: Specification, N: int, params: TemplateParams,
                         kind: str = "template", name: str | None = None) -> ProofObligation:
    """One clause per annotation identifier:
    assumptions on ``assumed``, assertions (induction hypothesis) on
    ``asserted`` and stream equations on ``streams`` imply the assertions
    on ``goal``.
    """
    for s in (params.assumed, params.asserted, params.streams, params.goal):
        if any(not 0 <= i <= N for i in s):
            raise ValueError(f"template positions outside [0, {N}]: {params.describe()}")
    enc = Encoder(spec, N)
    eqs = _equations(enc, spec, params.streams)
    clauses = []
    for alpha in spec.identifiers:
        hyp = _annotations(enc, spec.assume(alpha), params.assumed)
        hyp += _annotations(enc, spec.assert_(alpha), params.asserted)
        hyp += eqs
        psi = spec.assert_(alpha)
        goals = [(i, _conj([enc.encode(f, i) for f in psi])) for i in sorted(params.goal)]
        clauses.append(Clause(alpha, alpha, hyp, goals))
    return ProofObligation(kind, N, name or f"{kind}_N{N}", clauses, enc, params)


def begin_count(window: UnfoldingWindow) -> int:
    return max(1, 2 * (window.past + window.future))


def begin_params(window: UnfoldingWindow, N: int) -> TemplateParams:
    wp = window.past
    upto = range(N + 1)
    return TemplateParams.of(upto, (), upto, range(max(1, min(N + 1, 2 * wp))))


def run_params(window: UnfoldingWindow) -> tuple[int, TemplateParams]:
    wp, wf = window
    N = 3 * (wp + wf)
    middle = range(2 * wp, N - 2 * wf + 1)
    return N, TemplateParams.of(
        range(wp, N - wf + 1),
        [i for i in middle if i != 3 * wp],
        middle,
        [3 * wp],
    )


def end_params(window: UnfoldingWindow) -> tuple[int, TemplateParams]:
    wp, wf = window
    N = 3 * wp + wf
    return N, TemplateParams.of(
        range(wp, N + 1),
        range(2 * wp, 3 * wp),
        range(2 * wp, N + 1),
        range(3 * wp, N + 1),
    )


def begin_obligations(spec: Specification, window: UnfoldingWindow | None = None) -> list[ProofObligation]:
    window = window or compute_window(spec)
    return [
        instantiate_template(spec, N, begin_params(window, N), "begin", f"begin_N{N}")
        for N in range(begin_count(window))
    ]


def run_obligation(spec: Specification, window: UnfoldingWindow | None = None) -> ProofObligation:
    N, params = run_params(window or compute_window(spec))
    return instantiate_template(spec, N, params, "run", "run")


def end_obligation(spec: Specification, window: UnfoldingWindow | None = None) -> ProofObligation:
    N, params = end_params(window or compute_window(spec))
    return instantiate_template(spec, N, params, "end", "end")


def inductive_obligations(spec: Specification, window: UnfoldingWindow | None = None) -> list[ProofObligation]:
    window = window or compute_window(spec)
    return begin_obligations(spec, window) + [run_obligation(spec, window), end_obligation(spec, window)]


def trace_facts(enc: Encoder, spec: Specification, columns: Mapping[str, Sequence]) -> list[str]:
    """Equalities pinning every input variable to a concrete trace value."""
    types = spec.stream_types
    return [
        f"(= {enc.universe.var(name, j)} {smt_literal(v, types[name])})"
        for name in spec.input_names
        for j, v in enumerate(columns[name])
    ]


FINITE_MODES = ("global", "pointwise", "literal")


def finite_obligation(spec: Specification, N: int, mode: str = "global",
                      inputs: Mapping[str, Sequence] | None = None) -> ProofObligation:
    """Correctness of every execution of length N+1, one clause per (identifier, position).

    ``literal``: assumptions and equations at the clause's own position only.
    ``pointwise``: the clause's own assumptions, equations at every position.
    ``global``: assumptions and equations at every position.
    ``inputs`` optionally pins the input streams to a concrete trace.
    """
    if mode not in FINITE_MODES:
        raise ValueError(f"unknown finite mode {mode!r}")
    enc = Encoder(spec, N)
    everywhere = range(N + 1)
    all_eqs = _equations(enc, spec, everywhere)
    clauses = []
    for i in everywhere:
        eqs = _equations(enc, spec, [i]) if mode == "literal" else all_eqs
        for alpha in spec.identifiers:
            hyp = _annotations(enc, spec.assume(alpha), everywhere if mode == "global" else [i]) + eqs
            goal = _conj(_annotations(enc, spec.assert_(alpha), [i]))
            clauses.append(Clause(f"{alpha}@{i}", alpha, hyp, [(i, goal)]))
    facts = trace_facts(enc, spec, inputs) if inputs is not None else []
    return ProofObligation("finite", N, f"finite_N{N}", clauses, enc, None, facts, note=f"mode={mode}")


def _division_nodes(e: Expr) -> list[Apply]:
    return [n for n in walk(e) if isinstance(n, Apply) and n.op == "/"]


def div_obligations(spec: Specification, window: UnfoldingWindow | None = None) -> list[ProofObligation]:
    """Divisor-nonzero checks at the goal positions of every inductive window.

    The antecedent conjoins the assumptions of all identifiers, the
    assertions at induction-hypothesis positions, and the stream
    equations of the window.
    """
    window = window or compute_window(spec)
    windows = [(f"begin_N{N}", N, begin_params(window, N)) for N in range(begin_count(window))]
    windows.append(("run", *run_params(window)))
    windows.append(("end", *end_params(window)))
    obligations = []
    for wname, N, params in windows:
        for d in spec.outputs:
            nodes = _division_nodes(d.expr)
            for idx, node in enumerate(nodes):
                for pos in sorted(params.goal):
                    enc = Encoder(spec, N)
                    conds = enc.div_side_conditions(d.expr, pos, only=node)
                    if not conds:
                        continue  # division sits in a default that is not taken
                    hyp = []
                    for alpha in spec.identifiers:
                        hyp += _annotations(enc, spec.assume(alpha), params.assumed)
                        hyp += _annotations(enc, spec.assert_(alpha), params.asserted)
                    hyp += _equations(enc, spec, params.streams)
                    label = f"{d.name}/div{idx}@{pos}"
                    obligations.append(ProofObligation(
                        "divcheck", N, f"divcheck_{wname}_{d.name}_d{idx}_p{pos}",
                        [Clause(label, None, hyp, [(pos, _conj(conds))])], enc, params,
                        note=f"divisor of division {idx} in {d.name} at position {pos}"))
    return obligations


def vacuity_obligations(spec: Specification, window: UnfoldingWindow | None = None) -> list[ProofObligation]:
    """One per identifier; valid iff its Run-window hypotheses are unsatisfiable."""
    N, params = run_params(window or compute_window(spec))
    base = instantiate_template(spec, N, params, "vacuity", "vacuity_run")
    return [
        ProofObligation("vacuity", N, f"vacuity_run_{c.alpha}",
                        [Clause(c.label, c.alpha, [], [(-1, f"(not {_conj(c.hypotheses)})")])],
                        base.encoder, params)
        for c in base.clauses
    ]


VERIFIED, REFUTED, UNDECIDED = "verified", "refuted", "unknown"


def inductive_verdict(statuses: Iterable[str]) -> str:
    """Combine per-obligation outcomes ("valid" / "invalid" / "unknown").

    Any invalid obligation refutes; otherwise any unknown leaves the
    verdict open.  An empty collection is (vacuously) verified.
    """
    statuses = list(statuses)
    if "invalid" in statuses:
        return REFUTED
    if any(s != "valid" for s in statuses):
        return UNDECIDED
    return VERIFIED
