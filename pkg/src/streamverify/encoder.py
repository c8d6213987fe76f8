"""SMT-LIB 2 encoding of stream expressions over a window of N+1 positions."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .frontend.ast import (
    Apply, Const, Expr, Ite, Offset, Specification, StreamRef, ValueType,
)

SORTS = {
    ValueType.BOOL: "Bool",
    ValueType.INT32: "Int",
    ValueType.INT64: "Int",
    ValueType.UINT64: "Int",
    ValueType.FLOAT32: "Real",
    ValueType.FLOAT64: "Real",
}

UNINTERPRETED = {"sqrt": "sv_sqrt", "sin": "sv_sin", "cos": "sv_cos", "arctan": "sv_arctan"}
PI = Fraction("3.1415926535")


def smt_rational(q: Fraction) -> str:
    body = f"{abs(q.numerator)}.0" if q.denominator == 1 else f"(/ {abs(q.numerator)}.0 {q.denominator}.0)"
    return f"(- {body})" if q < 0 else body


def smt_literal(value, ty: ValueType | None) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if ty is not None and ty.is_float or isinstance(value, (Fraction, float)):
        return smt_rational(Fraction(value))
    return f"(- {-value})" if value < 0 else str(value)


def _symbol_text(name: str) -> str:
    return "".join(c if 32 < ord(c) < 127 and c not in "|\\" else f"#u{ord(c):x}" for c in name)


@dataclass
class VariableUniverse:
    """One solver constant per (stream, position) for positions 0..N."""

    spec: Specification
    N: int
    symbols: dict[tuple[str, int], str] = field(init=False)
    reverse: dict[str, tuple[str, int]] = field(init=False)
    sorts: dict[str, str] = field(init=False)

    def __post_init__(self):
        self.symbols, self.reverse, self.sorts = {}, {}, {}
        types = self.spec.stream_types
        for name in self.spec.input_names + self.spec.output_names:
            for j in range(self.N + 1):
                sym = f"|{_symbol_text(name)}@{j}|"
                self.symbols[name, j] = sym
                self.reverse[sym] = (name, j)
                self.sorts[sym] = SORTS[types[name]]

    def var(self, name: str, j: int) -> str:
        return self.symbols[name, j]

    def __len__(self) -> int:
        return len(self.symbols)

    def declarations(self) -> list[str]:
        return [f"(declare-const {s} {self.sorts[s]})" for s in self.symbols.values()]

    def side_constraints(self) -> list[str]:
        """Non-negativity of every UInt64 variable."""
        types = self.spec.stream_types
        return [f"(>= {sym} 0)" for (name, _), sym in self.symbols.items() if types[name] is ValueType.UINT64]


_CHAINABLE = {"<": "<", "<=": "<=", ">": ">", ">=": ">=", "==": "="}


class Encoder:
    """Recursive encoding of stream expressions at a position.

    Out-of-window offset accesses are replaced by the encoded default,
    which is evaluated at the accessing position.
    """

    def __init__(self, spec: Specification, N: int, universe: VariableUniverse | None = None):
        self.spec = spec
        self.N = N
        self.universe = universe or VariableUniverse(spec, N)
        self.inputs = set(spec.input_names)
        self.uf_terms: dict[str, str] = {}  # application term -> function symbol

    def encode(self, e: Expr, j: int) -> str:
        if isinstance(e, Const):
            return smt_literal(e.value, e.ty)
        if isinstance(e, StreamRef):
            return self.universe.var(e.name, j)
        if isinstance(e, Offset):
            target = j + e.offset
            if 0 <= target <= self.N:
                return self.universe.var(e.stream, target)
            return self.encode(e.default, j)
        if isinstance(e, Ite):
            return f"(ite {self.encode(e.cond, j)} {self.encode(e.then, j)} {self.encode(e.orelse, j)})"
        if isinstance(e, Apply):
            return self._apply(e, j)
        raise TypeError(f"cannot encode {type(e).__name__}; desugar first")

    def _apply(self, e: Apply, j: int) -> str:
        args = [self.encode(a, j) for a in e.args]
        op = e.op
        if op in ("+", "-", "*"):
            return f"({op} {args[0]} {args[1]})"
        if op == "/":
            a, b = args
            if e.ty is not None and e.ty.is_integer:
                # truncating integer division
                return f"(let ((_n {a}) (_d {b})) (ite (>= _n 0) (div _n _d) (- (div (- _n) _d))))"
            return f"(/ {a} {b})"
        if op == "neg":
            return f"(- {args[0]})"
        if op in _CHAINABLE:
            return f"({_CHAINABLE[op]} {' '.join(args)})"
        if op == "!=":
            pairs = [f"(not (= {x} {y}))" for x, y in zip(args, args[1:])]
            return pairs[0] if len(pairs) == 1 else f"(and {' '.join(pairs)})"
        if op in ("and", "or"):
            return f"({op} {args[0]} {args[1]})"
        if op == "->":
            return f"(=> {args[0]} {args[1]})"
        if op == "not":
            return f"(not {args[0]})"
        if op == "cast":
            src = e.args[0].ty
            if e.ty is not None and e.ty.is_float and src is not None and src.is_integer:
                return f"(to_real {args[0]})"
            return args[0]
        if op in UNINTERPRETED:
            term = f"({UNINTERPRETED[op]} {args[0]})"
            self.uf_terms.setdefault(term, op)
            return term
        raise TypeError(f"unknown operator {op!r}")

    def equation(self, output: str, j: int) -> str:
        """sigma_k^j = smt(e_k)(j)"""
        return f"(= {self.universe.var(output, j)} {self.encode(self.spec.output(output).expr, j)})"

    def div_side_conditions(self, e: Expr, j: int, only: Expr | None = None) -> list[str]:
        """Divisor-nonzero formulas for every division reachable at position j.

        With ``only``, restrict to occurrences of that (identical) node.
        """
        out: list[str] = []
        self._divs(e, j, [], out, only)
        return out

    def _divs(self, e: Expr, j: int, guards: list[str], out: list[str], only=None) -> None:
        if isinstance(e, Offset):
            if not 0 <= j + e.offset <= self.N:
                self._divs(e.default, j, guards, out, only)
            return
        if isinstance(e, Ite):
            c = self.encode(e.cond, j)
            self._divs(e.cond, j, guards, out, only)
            self._divs(e.then, j, guards + [c], out, only)
            self._divs(e.orelse, j, guards + [f"(not {c})"], out, only)
            return
        if isinstance(e, Apply):
            for a in e.args:
                self._divs(a, j, guards, out, only)
            if e.op == "/" and (only is None or e is only):
                zero = "0" if e.ty is not None and e.ty.is_integer else "0.0"
                cond = f"(not (= {self.encode(e.args[1], j)} {zero}))"
                if guards:
                    g = guards[0] if len(guards) == 1 else f"(and {' '.join(guards)})"
                    cond = f"(=> {g} {cond})"
                out.append(cond)

    def range_axioms(self) -> list[str]:
        """Range facts for every uninterpreted application created so far."""
        half_pi = smt_rational(PI / 2)
        neg_half_pi = smt_rational(-PI / 2)
        axioms = []
        for term, fn in self.uf_terms.items():
            if fn == "sqrt":
                axioms.append(f"(>= {term} 0.0)")
            elif fn in ("sin", "cos"):
                axioms.append(f"(and (<= (- 1.0) {term}) (<= {term} 1.0))")
            else:
                axioms.append(f"(and (< {neg_half_pi} {term}) (< {term} {half_pi}))")
        return axioms

    def function_declarations(self) -> list[str]:
        used = sorted(set(self.uf_terms.values()))
        return [f"(declare-fun {UNINTERPRETED[f]} (Real) Real)" for f in used]
