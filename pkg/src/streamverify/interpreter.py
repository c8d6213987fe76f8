"""Offline evaluation of a core specification over a finite trace."""
from __future__ import annotations

import csv
import io
import math
import operator
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .analysis import build_graph, evaluation_order
from .errors import EvaluationError, TraceError
from .frontend.ast import (
    Apply, Const, Expr, Ite, Offset, Specification, StreamRef, ValueType, INTEGER_RANGES,
)
from .frontend.pretty import pretty_expr

Value = bool | int | Fraction | float


@dataclass
class Trace:
    """Input values by stream name; every column has the same length."""

    columns: dict[str, list[Value]]

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise TraceError(f"trace columns have different lengths: {sorted(lengths)}")

    @property
    def length(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def validate(self, spec: Specification) -> None:
        expected = set(spec.input_names)
        got = set(self.columns)
        if expected != got:
            missing = ", ".join(sorted(expected - got)) or "-"
            extra = ", ".join(sorted(got - expected)) or "-"
            raise TraceError(f"trace columns do not match inputs (missing: {missing}; unexpected: {extra})")
        for d in spec.inputs:
            for i, v in enumerate(self.columns[d.name]):
                if not _has_type(v, d.type):
                    raise TraceError(f"value {v!r} at position {i} is not a {d.type} (input {d.name!r})")

    @classmethod
    def from_csv(cls, source: str | io.TextIOBase, spec: Specification) -> "Trace":
        """Read a CSV trace whose header names the input streams."""
        if isinstance(source, str):
            source = io.StringIO(source)
        rows = list(csv.reader(source))
        if not rows:
            raise TraceError("empty trace file")
        header = [h.strip() for h in rows[0]]
        types = {d.name: d.type for d in spec.inputs}
        unknown = [h for h in header if h not in types]
        missing = [n for n in types if n not in header]
        if unknown or missing:
            raise TraceError(
                f"trace header does not match inputs (missing: {', '.join(missing) or '-'}; "
                f"unexpected: {', '.join(unknown) or '-'})")
        columns: dict[str, list[Value]] = {h: [] for h in header}
        for lineno, row in enumerate(rows[1:], start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise TraceError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            for h, cell in zip(header, row):
                columns[h].append(parse_value(cell.strip(), types[h], f"line {lineno}, column {h!r}"))
        trace = cls(columns)
        trace.validate(spec)
        return trace

    def to_csv(self, order: Sequence[str] | None = None) -> str:
        order = list(order or self.columns)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(order)
        for i in range(self.length):
            w.writerow([format_value(self.columns[n][i]) for n in order])
        return buf.getvalue()


def _has_type(v: Value, ty: ValueType) -> bool:
    if ty is ValueType.BOOL:
        return isinstance(v, bool)
    if isinstance(v, bool):
        return False
    if ty.is_integer:
        lo, hi = INTEGER_RANGES[ty]
        return isinstance(v, int) and lo <= v <= hi
    return isinstance(v, (int, float, Fraction))


def parse_value(text: str, ty: ValueType, where: str = "") -> Value:
    try:
        if ty is ValueType.BOOL:
            if text not in ("true", "false"):
                raise ValueError
            return text == "true"
        if ty.is_integer:
            v = int(text)
            lo, hi = INTEGER_RANGES[ty]
            if not lo <= v <= hi:
                raise TraceError(f"{where}: {v} out of range for {ty}")
            return v
        return Fraction(text)
    except ValueError:
        raise TraceError(f"{where}: cannot read {text!r} as {ty}") from None


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        from .frontend.pretty import format_fraction
        text = format_fraction(v)
        return text if "/" not in text else repr(float(v))
    return repr(v) if isinstance(v, float) else str(v)


@dataclass
class EvaluationResult:
    length: int
    outputs: dict[str, list[Value]]
    triggers: list[tuple[int, str]] = field(default_factory=list)
    assumptions: dict[str, list[bool]] = field(default_factory=dict)
    assertions: dict[str, list[bool]] = field(default_factory=dict)


@dataclass
class AnnotationVerdict:
    alpha: str
    assumption_holds: list[bool]
    assertion_holds: list[bool]

    @property
    def violations(self) -> list[int]:
        return [i for i, (a, g) in enumerate(zip(self.assumption_holds, self.assertion_holds)) if a and not g]

    @property
    def respected(self) -> bool:
        return not self.violations


def _int_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


_CMP = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
        "==": operator.eq, "!=": operator.ne}
_ARITH = {"+": operator.add, "-": operator.sub, "*": operator.mul}
_TRANSCENDENTAL = {"sqrt": math.sqrt, "sin": math.sin, "cos": math.cos, "arctan": math.atan}

Getter = Callable[[str, int], Value]
Compiled = Callable[[int], Value]


class _Compiler:
    """Turns an expression into a closure over (position) -> value."""

    def __init__(self, get: Getter, length: int, exact: bool, where: list):
        self.get = get
        self.length = length
        self.exact = exact
        self.where = where  # [stream, position] of the cell being computed

    def error(self, msg: str):
        return EvaluationError(msg, self.where[0], self.where[1])

    def compile(self, e: Expr) -> Compiled:
        if isinstance(e, Const):
            v = e.value
            if isinstance(v, Fraction) and not self.exact:
                v = float(v)
            return lambda j: v
        if isinstance(e, StreamRef):
            name, get = e.name, self.get
            return lambda j: get(name, j)
        if isinstance(e, Offset):
            name, k, get = e.stream, e.offset, self.get
            default = self.compile(e.default)
            return lambda j: get(name, j + k) if 0 <= j + k < self.length else default(j)
        if isinstance(e, Ite):
            c, t, f = self.compile(e.cond), self.compile(e.then), self.compile(e.orelse)
            return lambda j: t(j) if c(j) else f(j)
        if isinstance(e, Apply):
            return self.apply(e)
        raise TypeError(f"cannot evaluate {type(e).__name__}; desugar first")

    def apply(self, e: Apply) -> Compiled:
        op = e.op
        args = [self.compile(a) for a in e.args]
        if op in _ARITH:
            f, a, b = _ARITH[op], args[0], args[1]
            return lambda j: f(a(j), b(j))
        if op == "/":
            a, b = args
            integer = e.ty is not None and e.ty.is_integer

            def divide(j):
                x, y = a(j), b(j)
                if y == 0:
                    raise self.error("division by zero")
                return _int_div(x, y) if integer else x / y
            return divide
        if op == "neg":
            (a,) = args
            return lambda j: -a(j)
        if op in _CMP:
            f = _CMP[op]
            if len(args) == 2:
                a, b = args
                return lambda j: f(a(j), b(j))

            def chain(j):
                vals = [g(j) for g in args]
                return all(f(x, y) for x, y in zip(vals, vals[1:]))
            return chain
        if op == "and":
            a, b = args
            return lambda j: a(j) and b(j)
        if op == "or":
            a, b = args
            return lambda j: a(j) or b(j)
        if op == "->":
            a, b = args
            return lambda j: (not a(j)) or b(j)
        if op == "not":
            (a,) = args
            return lambda j: not a(j)
        if op == "cast":
            (a,) = args
            if e.ty is not None and e.ty.is_float:
                conv = Fraction if self.exact else float
                return lambda j: conv(a(j))
            return a
        if op in _TRANSCENDENTAL:
            f, (a,) = _TRANSCENDENTAL[op], args
            exact = self.exact

            def call(j):
                try:
                    r = f(float(a(j)))
                except ValueError:
                    raise self.error(f"{op} undefined for {a(j)}") from None
                return Fraction(r) if exact else r
            return call
        raise TypeError(f"unknown operator {op!r}")


class Evaluator:
    """Evaluates one specification over arbitrarily many traces."""

    def __init__(self, spec: Specification, exact: bool = False):
        self.spec = spec
        self.exact = exact
        self.order = [n for layer in evaluation_order(build_graph(spec)) for n in layer]
        self._lazy: _LazyContext | None = None

    def _convert(self, v: Value) -> Value:
        if isinstance(v, (Fraction, float)) and not isinstance(v, bool):
            return Fraction(v) if self.exact else float(v)
        return v

    def evaluate(self, trace: Trace | Mapping[str, Sequence[Value]]) -> EvaluationResult:
        spec = self.spec
        columns = trace.columns if isinstance(trace, Trace) else trace
        n = len(next(iter(columns.values()))) if columns else 0
        float_inputs = {d.name for d in spec.inputs if d.type.is_float}
        values: dict[str, list] = {
            name: [self._convert(v) for v in col] if name in float_inputs else list(col)
            for name, col in columns.items()
        }
        pending = object()
        busy = object()
        for name in spec.output_names:
            values[name] = [pending] * n
        where = [None, 0]
        compiled: dict[str, Compiled] = {}

        def get(name: str, j: int) -> Value:
            v = values[name][j]
            if v is pending:
                values[name][j] = busy
                saved = where[:]
                where[:] = [name, j]
                v = compiled[name](j)
                where[:] = saved
                values[name][j] = v
            elif v is busy:
                raise EvaluationError("cyclic evaluation", name, j)
            return v

        comp = _Compiler(get, n, self.exact, where)
        for d in spec.outputs:
            compiled[d.name] = comp.compile(d.expr)
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 50 * n + 1000))
        try:
            for j in range(n):
                for name in self.order:
                    get(name, j)
            result = EvaluationResult(n, {name: values[name] for name in spec.output_names})
            where[:] = ["<annotation>", 0]
            for t in spec.triggers:
                cond = comp.compile(t.condition)
                msg = t.message if t.message is not None else pretty_expr(t.condition)
                for j in range(n):
                    where[1] = j
                    if cond(j):
                        result.triggers.append((j, msg))
            result.triggers.sort(key=lambda ev: ev[0])
            for alpha in spec.identifiers:
                result.assumptions[alpha] = self._table(comp, spec.assume(alpha), n, where)
                result.assertions[alpha] = self._table(comp, spec.assert_(alpha), n, where)
        finally:
            sys.setrecursionlimit(limit)
        return result

    @staticmethod
    def _table(comp: _Compiler, formulas: list[Expr], n: int, where) -> list[bool]:
        fs = [comp.compile(f) for f in formulas]
        out = []
        for j in range(n):
            where[1] = j
            out.append(all(bool(f(j)) for f in fs))
        return out

    def holds(self, columns: Mapping[str, Sequence[Value]], formulas: Sequence[Expr],
              positions: Sequence[int]) -> bool:
        """Whether every formula holds at every given position.

        Only the stream cells the formulas actually reach are computed;
        compiled closures are reused across calls.
        """
        if self._lazy is None:
            self._lazy = _LazyContext(self)
        return self._lazy.holds(columns, formulas, positions)

    def check_annotations(self, trace) -> dict[str, AnnotationVerdict]:
        res = self.evaluate(trace)
        return {
            a: AnnotationVerdict(a, res.assumptions[a], res.assertions[a])
            for a in self.spec.identifiers
        }


class _LazyContext:
    """Demand-driven cell evaluation with one compilation per specification."""

    _BUSY = object()

    def __init__(self, ev: Evaluator):
        self.ev = ev
        self.memo: dict[tuple[str, int], Value] = {}
        self.columns: Mapping[str, Sequence[Value]] = {}
        self.where = ["<annotation>", 0]
        self.comp = _Compiler(self.get, 0, ev.exact, self.where)
        self.outputs = {d.name: self.comp.compile(d.expr) for d in ev.spec.outputs}
        self.formulas: dict[int, tuple[Expr, Compiled]] = {}
        self.float_inputs = {d.name for d in ev.spec.inputs if d.type.is_float}

    def get(self, name: str, j: int) -> Value:
        memo = self.memo
        v = memo.get((name, j), self._BUSY)
        if v is self._BUSY:
            if (name, j) in memo:
                raise EvaluationError("cyclic evaluation", name, j)
            col = self.columns.get(name)
            if col is not None:
                v = col[j]
                if name in self.float_inputs:
                    v = self.ev._convert(v)
                memo[name, j] = v
                return v
            memo[name, j] = self._BUSY
            v = memo[name, j] = self.outputs[name](j)
        return v

    def compiled(self, f: Expr) -> Compiled:
        hit = self.formulas.get(id(f))
        if hit is None or hit[0] is not f:
            hit = self.formulas[id(f)] = (f, self.comp.compile(f))
        return hit[1]

    def holds(self, columns, formulas, positions) -> bool:
        n = len(next(iter(columns.values()))) if columns else 0
        self.memo = {}
        self.columns = columns
        self.comp.length = n
        fs = [self.compiled(f) for f in formulas]
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 50 * n + 1000))
        try:
            for j in positions:
                self.where[1] = j
                if not all(f(j) for f in fs):
                    return False
            return True
        finally:
            sys.setrecursionlimit(limit)


def evaluate(spec: Specification, trace, exact: bool = False) -> EvaluationResult:
    return Evaluator(spec, exact).evaluate(trace)


def check_annotations(spec: Specification, trace, exact: bool = False) -> dict[str, AnnotationVerdict]:
    """Per-identifier verdicts: respected iff assumptions imply assertions at every position."""
    return Evaluator(spec, exact).check_annotations(trace)
