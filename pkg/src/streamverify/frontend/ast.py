"""Expression trees and declarations shared by every pipeline phase."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterator, Union

from ..errors import Span


class ValueType(enum.Enum):
    BOOL = "Bool"
    INT32 = "Int32"
    INT64 = "Int64"
    UINT64 = "UInt64"
    FLOAT32 = "Float32"
    FLOAT64 = "Float64"

    @property
    def is_numeric(self) -> bool:
        return self is not ValueType.BOOL

    @property
    def is_integer(self) -> bool:
        return self in (ValueType.INT32, ValueType.INT64, ValueType.UINT64)

    @property
    def is_float(self) -> bool:
        return self in (ValueType.FLOAT32, ValueType.FLOAT64)

    @classmethod
    def from_name(cls, name: str) -> "ValueType | None":
        for member in cls:
            if member.value == name:
                return member
        return None

    def __str__(self) -> str:
        return self.value


INTEGER_RANGES = {
    ValueType.INT32: (-(2**31), 2**31 - 1),
    ValueType.INT64: (-(2**63), 2**63 - 1),
    ValueType.UINT64: (0, 2**64 - 1),
}

ARITHMETIC = ("+", "-", "*", "/")
COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")
LOGICAL = ("and", "or", "->", "not")
# Functions that need `import math`.
TRANSCENDENTAL = ("sqrt", "sin", "cos", "arctan")
MATH_FUNCTIONS = TRANSCENDENTAL + ("abs", "min", "max", "cast")
# Rewritten away by the desugarer.
SUGAR_FUNCTIONS = ("abs", "min", "max")


@dataclass(frozen=True)
class Expr:
    ty: ValueType | None = field(default=None, compare=False, kw_only=True, repr=False)
    span: Span | None = field(default=None, compare=False, kw_only=True, repr=False)


@dataclass(frozen=True)
class Const(Expr):
    # bool, int, or Fraction (floating types keep the exact written decimal)
    value: Union[bool, int, Fraction]
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class StreamRef(Expr):
    name: str


@dataclass(frozen=True)
class Ite(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class Apply(Expr):
    """Operator or function application.

    Comparison operators with more than two arguments denote a chain:
    ``Apply("<=", (a, b, c))`` is ``a <= b and b <= c``.
    """

    op: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Offset(Expr):
    stream: str
    offset: int
    default: Expr


@dataclass(frozen=True)
class RangeOffset(Expr):
    """``s[lo..hi, default, op]``; removed by desugaring."""

    stream: str
    lo: int
    hi: int
    default: Expr
    op: str


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, Ite):
        return (e.cond, e.then, e.orelse)
    if isinstance(e, Apply):
        return e.args
    if isinstance(e, (Offset, RangeOffset)):
        return (e.default,)
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def map_children(e: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    if isinstance(e, Ite):
        return replace(e, cond=fn(e.cond), then=fn(e.then), orelse=fn(e.orelse))
    if isinstance(e, Apply):
        return replace(e, args=tuple(fn(a) for a in e.args))
    if isinstance(e, (Offset, RangeOffset)):
        return replace(e, default=fn(e.default))
    return e


def stream_accesses(e: Expr) -> Iterator[tuple[str, int]]:
    """Every syntactic stream access in ``e`` as (name, offset)."""
    for node in walk(e):
        if isinstance(node, StreamRef):
            yield node.name, 0
        elif isinstance(node, Offset):
            yield node.stream, node.offset
        elif isinstance(node, RangeOffset):
            for k in range(node.lo, node.hi + 1):
                yield node.stream, k


# -- declarations -----------------------------------------------------------

@dataclass(frozen=True)
class InputDecl:
    name: str
    type: ValueType
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class OutputDecl:
    name: str
    type: ValueType | None
    expr: Expr
    span: Span | None = field(default=None, compare=False)
    activation: Expr | None = field(default=None, compare=False)


@dataclass(frozen=True)
class TriggerDecl:
    condition: Expr
    message: str | None = None
    once: bool = False
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class AnnotationDecl:
    kind: str  # "assume" | "assert"
    ident: str
    formula: Expr
    span: Span | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ImportDecl:
    module: str
    span: Span | None = field(default=None, compare=False)


Declaration = Union[InputDecl, OutputDecl, TriggerDecl, AnnotationDecl, ImportDecl]


@dataclass(frozen=True)
class RawSpecification:
    items: tuple[Declaration, ...]

    @property
    def inputs(self) -> list[InputDecl]:
        return [d for d in self.items if isinstance(d, InputDecl)]

    @property
    def outputs(self) -> list[OutputDecl]:
        return [d for d in self.items if isinstance(d, OutputDecl)]


@dataclass(frozen=True)
class Specification:
    inputs: tuple[InputDecl, ...] = ()
    outputs: tuple[OutputDecl, ...] = ()
    triggers: tuple[TriggerDecl, ...] = ()
    assumptions: tuple[AnnotationDecl, ...] = ()
    assertions: tuple[AnnotationDecl, ...] = ()
    imports: tuple[str, ...] = ()

    @property
    def identifiers(self) -> tuple[str, ...]:
        """The annotation identifier universe, in first-appearance order."""
        seen: dict[str, None] = {}
        for a in self.assumptions + self.assertions:
            seen.setdefault(a.ident, None)
        return tuple(seen)

    def assume(self, alpha: str) -> list[Expr]:
        return [a.formula for a in self.assumptions if a.ident == alpha]

    def assert_(self, alpha: str) -> list[Expr]:
        return [a.formula for a in self.assertions if a.ident == alpha]

    @property
    def stream_types(self) -> dict[str, ValueType]:
        types = {d.name: d.type for d in self.inputs}
        types.update({d.name: d.type for d in self.outputs})
        return types

    @property
    def input_names(self) -> list[str]:
        return [d.name for d in self.inputs]

    @property
    def output_names(self) -> list[str]:
        return [d.name for d in self.outputs]

    def output(self, name: str) -> OutputDecl:
        for d in self.outputs:
            if d.name == name:
                return d
        raise KeyError(name)

    def expressions(self) -> Iterator[Expr]:
        for d in self.outputs:
            yield d.expr
        for t in self.triggers:
            yield t.condition
        for a in self.assumptions + self.assertions:
            yield a.formula
