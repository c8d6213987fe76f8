"""Random input traces that satisfy a specification's assumptions."""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterator

from .errors import EvaluationError
from .frontend.ast import (
    INTEGER_RANGES, Apply, Const, Expr, Offset, Specification, ValueType, stream_accesses, walk,
)
from .interpreter import Evaluator, Trace

_FLOAT_STEPS = [Fraction(1, 1000), Fraction(1, 100), Fraction(1, 20), Fraction(1, 10), Fraction(1), Fraction(10)]
_INT_STEPS = [1, 2, 5, 10, 100, 1000, 10000, 50000, 99999]


def spec_constants(spec: Specification) -> tuple[list[int], list[Fraction]]:
    ints, floats = {0, 1}, {Fraction(0), Fraction(1)}
    for e in spec.expressions():
        for n in walk(e):
            if isinstance(n, Const) and not isinstance(n.value, bool):
                if isinstance(n.value, int):
                    ints.add(n.value)
                else:
                    floats.add(Fraction(n.value))
    return sorted(ints), sorted(floats)


def future_horizon(spec: Specification) -> int:
    """A bound on how far ahead any cell's value can reach."""
    reach = max((n.offset for e in spec.expressions() for n in walk(e) if isinstance(n, Offset)), default=0)
    return max(0, reach) * (len(spec.outputs) + 1)


def conjuncts(e: Expr) -> list[Expr]:
    if isinstance(e, Apply) and e.op == "and":
        return [c for a in e.args for c in conjuncts(a)]
    return [e]


def input_dependencies(spec: Specification) -> dict[str, frozenset[str]]:
    """For every stream, the input streams its value can depend on."""
    deps: dict[str, frozenset[str]] = {n: frozenset([n]) for n in spec.input_names}
    direct = {d.name: {name for name, _ in stream_accesses(d.expr)} for d in spec.outputs}

    def resolve(name: str, seen: frozenset[str]) -> frozenset[str]:
        if name in deps:
            return deps[name]
        out: set[str] = set()
        for m in direct[name]:
            if m not in seen:
                out |= resolve(m, seen | {name})
        if not seen:
            deps[name] = frozenset(out)
        return frozenset(out)

    for name in spec.output_names:
        resolve(name, frozenset())
    return deps


class TraceGenerator:
    """Depth-first search over input values, one position at a time.

    Inputs are assigned one by one; each assumption conjunct is checked,
    at the newest position whose value can no longer change, as soon as
    all inputs it depends on are assigned.  Complete traces are re-checked
    in full, so every trace produced satisfies all assumptions everywhere.
    """

    def __init__(self, spec: Specification, rng: random.Random | int | None = None,
                 exact: bool = False, tries: int = 16, restarts: int = 4, budget: int = 20000):
        self.spec = spec
        self.rng = rng if isinstance(rng, random.Random) else random.Random(rng)
        self.evaluator = Evaluator(spec, exact)
        self.assumptions = [a.formula for a in spec.assumptions]
        self.ints, self.floats = spec_constants(spec)
        self.horizon = future_horizon(spec)
        self.tries = tries
        self.restarts = restarts
        self.budget = budget
        deps = input_dependencies(spec)
        names = spec.input_names
        # conjuncts grouped by the last input (in declaration order) they need
        self.ready: dict[int, list[Expr]] = {i: [] for i in range(-1, len(names))}
        for f in self.assumptions:
            for c in conjuncts(f):
                need = set()
                for name, _ in stream_accesses(c):
                    need |= deps[name]
                last = max((names.index(n) for n in need), default=-1)
                self.ready[last].append(c)
        self.infeasible: set[int] = set()

    # value pools ---------------------------------------------------------
    def _int(self, ty: ValueType, prev: int | None) -> int:
        lo, hi = INTEGER_RANGES[ty]
        r = self.rng.random()
        if prev is not None and r < 0.25:
            v = prev
        elif prev is not None and r < 0.45:
            v = prev + self.rng.choice(_INT_STEPS)
        elif prev is not None and r < 0.55:
            v = prev - self.rng.choice(_INT_STEPS)
        elif r < 0.8:
            v = self.rng.choice(self.ints) + self.rng.choice((-1, 0, 0, 1))
        else:
            v = self.rng.randint(-20, 20)
        return min(hi, max(lo, v))

    def _float(self, prev: Fraction | None) -> Fraction:
        r = self.rng.random()
        if prev is not None and r < 0.15:
            return prev
        if prev is not None and r < 0.55:
            step = self.rng.choice(_FLOAT_STEPS)
            return prev - step if r < 0.4 else prev + step
        if r < 0.8:
            c = self.rng.choice(self.floats)
            return c + self.rng.choice((-1, 0, 0, 1)) * self.rng.choice(_FLOAT_STEPS)
        return Fraction(self.rng.randint(-100000, 100000), 1000)

    def _value(self, ty: ValueType, prev):
        if ty is ValueType.BOOL:
            return self.rng.random() < 0.5
        if ty.is_integer:
            return self._int(ty, prev)
        return self._float(prev)

    # search ----------------------------------------------------------------
    def _ok(self, columns, formulas, positions) -> bool:
        if not formulas or not positions:
            return True
        try:
            return self.evaluator.holds(columns, formulas, positions)
        except EvaluationError:
            return False

    def generate(self, length: int) -> Trace | None:
        """One trace of exactly ``length`` positions, or None if the search gives up."""
        inputs = self.spec.inputs
        columns: dict[str, list] = {d.name: [] for d in inputs}
        nodes = [0]

        def settled(k: int) -> list[int]:
            s = k - self.horizon
            return [s] if s >= 0 else []

        def assign(k: int) -> bool:
            """Greedy per-input rejection sampling of position k."""
            for idx, d in enumerate(inputs):
                col = columns[d.name]
                prev = col[k - 1] if k > 0 else None
                for _ in range(self.tries):
                    nodes[0] += 1
                    col[k] = self._value(d.type, prev)
                    if self._ok(columns, self.ready[idx], settled(k)):
                        break
                else:
                    return False
            return True

        def position(k: int) -> bool:
            if k == length:
                # cells near the end settle only now
                tail = list(range(max(0, length - self.horizon), length))
                return self._ok(columns, self.assumptions, tail) and self._ok(
                    columns, self.assumptions, range(length))
            for c in columns.values():
                c.append(None)
            for _ in range(self.restarts):
                if nodes[0] > self.budget:
                    break
                if assign(k) and self._ok(columns, self.ready[-1], settled(k)) and position(k + 1):
                    return True
            for c in columns.values():
                c.pop()
            return False

        if position(0):
            return Trace({n: list(c) for n, c in columns.items()})
        return None

    def traces(self, count: int, max_length: int, min_length: int = 1, attempts: int = 10) -> Iterator[Trace]:
        """``count`` traces with lengths drawn from [min_length, max_length].

        Lengths for which no trace is found are not drawn again.
        """
        lengths = [n for n in range(min_length, max_length + 1) if n not in self.infeasible]
        made = 0
        while made < count:
            if not lengths:
                raise RuntimeError("no assumption-satisfying trace found for any length")
            length = self.rng.choice(lengths)
            for _ in range(attempts):
                t = self.generate(length)
                if t is not None:
                    break
            else:
                self.infeasible.add(length)
                lengths.remove(length)
                continue
            made += 1
            yield t
