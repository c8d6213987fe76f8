"""Type inference by unification over stream, literal and cast types.

Integer literals adopt any numeric type their context demands; float
literals adopt Float32 or Float64.  Unconstrained literals fall back to
Int64 and Float64 respectively.
"""
from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

from ..errors import Span, TypeCheckError
from .ast import (
    ARITHMETIC, COMPARISONS, INTEGER_RANGES, MATH_FUNCTIONS, AnnotationDecl, Apply,
    Const, Expr, ImportDecl, InputDecl, Ite, Offset, OutputDecl, RangeOffset,
    RawSpecification, map_children, Specification, StreamRef, TriggerDecl, ValueType,
)
from .parser import parse_expression

_ARITY = {"sqrt": 1, "sin": 1, "cos": 1, "arctan": 1, "abs": 1, "cast": 1, "min": 2, "max": 2}
_KIND_RANK = {"any": 0, "numeric": 1, "float": 2}


class _Unifier:
    def __init__(self):
        self.parent: list[int] = []
        self.kind: list[str] = []
        self.concrete: list[ValueType | None] = []
        self.origin: list[Span | None] = []

    def fresh(self, kind: str = "any", span: Span | None = None) -> int:
        self.parent.append(len(self.parent))
        self.kind.append(kind)
        self.concrete.append(None)
        self.origin.append(span)
        return len(self.parent) - 1

    def of(self, vt: ValueType) -> int:
        v = self.fresh()
        self.concrete[v] = vt
        return v

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def describe(self, v: int) -> str:
        v = self.find(v)
        if self.concrete[v] is not None:
            return str(self.concrete[v])
        return {"any": "unknown", "numeric": "numeric literal", "float": "float literal"}[self.kind[v]]

    @staticmethod
    def _fits(vt: ValueType, kind: str) -> bool:
        return kind == "any" or (kind == "numeric" and vt.is_numeric) or (kind == "float" and vt.is_float)

    def unify(self, a: int, b: int, span: Span | None, what: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        ca, cb = self.concrete[ra], self.concrete[rb]
        if ca is not None and cb is not None and ca != cb:
            raise TypeCheckError(f"type mismatch in {what}: {ca} vs {cb}", span)
        kind = max(self.kind[ra], self.kind[rb], key=_KIND_RANK.__getitem__)
        conc = ca or cb
        if conc is not None and not self._fits(conc, kind):
            raise TypeCheckError(f"type mismatch in {what}: {self.describe(ra)} vs {self.describe(rb)}", span)
        self.parent[rb] = ra
        self.kind[ra] = kind
        self.concrete[ra] = conc

    def restrict(self, v: int, kind: str, span: Span | None, what: str) -> None:
        r = self.find(v)
        conc = self.concrete[r]
        if conc is not None:
            if not self._fits(conc, kind):
                need = "a numeric" if kind == "numeric" else "a float"
                raise TypeCheckError(f"{what} requires {need} type, found {conc}", span)
            return
        if _KIND_RANK[kind] > _KIND_RANK[self.kind[r]]:
            self.kind[r] = kind

    def resolve(self, v: int) -> ValueType | None:
        r = self.find(v)
        if self.concrete[r] is not None:
            return self.concrete[r]
        if self.kind[r] == "float":
            return ValueType.FLOAT64
        if self.kind[r] == "numeric":
            return ValueType.INT64
        return None


def _bind_constants(e: Expr, streams: set[str], constants: dict[str, str]) -> Expr:
    if isinstance(e, StreamRef) and e.name not in streams:
        if e.name not in constants:
            raise TypeCheckError(
                f"unknown stream {e.name!r}; free named constants need a binding (--const {e.name}=VALUE)", e.span)
        value = parse_expression(constants[e.name])
        if not isinstance(value, Const):
            raise TypeCheckError(f"constant binding for {e.name!r} must be a literal", e.span)
        return replace(value, span=e.span)
    if isinstance(e, (Offset, RangeOffset)) and e.stream not in streams:
        raise TypeCheckError(f"offset target {e.stream!r} is not a declared stream", e.span)
    return map_children(e, lambda c: _bind_constants(c, streams, constants))


class _Inference:
    def __init__(self, stream_vars: dict[str, int], u: _Unifier, math: bool):
        self.streams = stream_vars
        self.u = u
        self.math = math
        self.node_var: dict[int, int] = {}
        self.casts: list[tuple[Apply, int, int]] = []
        self.keep: list[Expr] = []  # keeps ids stable

    def infer(self, e: Expr) -> int:
        v = self._infer(e)
        self.node_var[id(e)] = v
        self.keep.append(e)
        return v

    def _infer(self, e: Expr) -> int:
        u = self.u
        if isinstance(e, Const):
            if isinstance(e.value, bool):
                return u.of(ValueType.BOOL)
            if isinstance(e.value, int):
                return u.fresh("numeric", e.span)
            return u.fresh("float", e.span)
        if isinstance(e, StreamRef):
            return self.streams[e.name]
        if isinstance(e, Ite):
            u.unify(self.infer(e.cond), u.of(ValueType.BOOL), e.span, "if condition")
            t = self.infer(e.then)
            u.unify(t, self.infer(e.orelse), e.span, "if branches")
            return t
        if isinstance(e, Offset):
            t = self.streams[e.stream]
            u.unify(t, self.infer(e.default), e.span, f"default value of {e.stream!r}")
            return t
        if isinstance(e, RangeOffset):
            t = self.streams[e.stream]
            u.unify(t, self.infer(e.default), e.span, f"default value of {e.stream!r}")
            return self._op_result(e.op, [t, t], e.span)
        if isinstance(e, Apply):
            if e.op in MATH_FUNCTIONS:
                return self._function(e)
            args = [self.infer(a) for a in e.args]
            return self._op_result(e.op, args, e.span)
        raise TypeCheckError(f"unexpected expression node {type(e).__name__}", e.span)

    def _op_result(self, op: str, args: list[int], span) -> int:
        u = self.u
        if op in ARITHMETIC or op == "neg":
            for a in args[1:]:
                u.unify(args[0], a, span, f"operator {op!r}")
            u.restrict(args[0], "numeric", span, f"operator {op!r}")
            return args[0]
        if op in COMPARISONS:
            for a in args[1:]:
                u.unify(args[0], a, span, f"comparison {op!r}")
            if op not in ("==", "!="):
                u.restrict(args[0], "numeric", span, f"comparison {op!r}")
            return u.of(ValueType.BOOL)
        if op in ("and", "or", "->", "not"):
            for a in args:
                u.unify(a, u.of(ValueType.BOOL), span, f"operator {op!r}")
            return u.of(ValueType.BOOL)
        raise TypeCheckError(f"unknown operator or function {op!r}", span)

    def _function(self, e: Apply) -> int:
        u = self.u
        if e.op != "cast" and not self.math:
            raise TypeCheckError(f"function {e.op!r} requires 'import math'", e.span)
        if len(e.args) != _ARITY[e.op]:
            raise TypeCheckError(f"{e.op} expects {_ARITY[e.op]} argument(s), got {len(e.args)}", e.span)
        args = [self.infer(a) for a in e.args]
        if e.op == "cast":
            u.restrict(args[0], "numeric", e.span, "cast")
            result = u.fresh("numeric", e.span)
            self.casts.append((e, args[0], result))
            return result
        if e.op in ("sqrt", "sin", "cos", "arctan"):
            u.restrict(args[0], "float", e.span, e.op)
            return args[0]
        for a in args[1:]:
            u.unify(args[0], a, e.span, e.op)
        u.restrict(args[0], "numeric", e.span, e.op)
        return args[0]

    def annotate(self, e: Expr) -> Expr:
        ty = self.u.resolve(self.node_var[id(e)])
        if ty is None:
            raise TypeCheckError("cannot infer a type for expression", e.span)
        if isinstance(e, Const) and not isinstance(e.value, bool):
            if ty.is_float:
                return replace(e, value=Fraction(e.value), ty=ty)
            lo, hi = INTEGER_RANGES[ty]
            if not lo <= e.value <= hi:
                raise TypeCheckError(f"literal {e.value} out of range for {ty}", e.span)
            return replace(e, ty=ty)
        return replace(map_children(e, self.annotate), ty=ty)


def infer_types(raw: RawSpecification, constants: dict[str, str] | None = None) -> Specification:
    """Assign a concrete type to every stream and expression node.

    ``constants`` binds free named constants (identifiers that are not
    streams) to literal source text.
    """
    constants = constants or {}
    u = _Unifier()
    math = any(isinstance(d, ImportDecl) and d.module == "math" for d in raw.items)
    stream_vars: dict[str, int] = {}
    for d in raw.items:
        if isinstance(d, InputDecl):
            stream_vars[d.name] = u.of(d.type)
        elif isinstance(d, OutputDecl):
            stream_vars[d.name] = u.of(d.type) if d.type else u.fresh("any", d.span)
    names = set(stream_vars)

    items = []
    for d in raw.items:
        if isinstance(d, OutputDecl):
            d = replace(d, expr=_bind_constants(d.expr, names, constants))
        elif isinstance(d, TriggerDecl):
            d = replace(d, condition=_bind_constants(d.condition, names, constants))
        elif isinstance(d, AnnotationDecl):
            d = replace(d, formula=_bind_constants(d.formula, names, constants))
        items.append(d)

    inf = _Inference(stream_vars, u, math)
    boolean = u.of(ValueType.BOOL)
    for d in items:
        if isinstance(d, OutputDecl):
            u.unify(stream_vars[d.name], inf.infer(d.expr), d.span, f"definition of output {d.name!r}")
        elif isinstance(d, TriggerDecl):
            u.unify(inf.infer(d.condition), boolean, d.span, "trigger condition")
        elif isinstance(d, AnnotationDecl):
            u.unify(inf.infer(d.formula), boolean, d.span, f"{d.kind} <{d.ident}> formula")

    for node, arg, result in inf.casts:
        src, dst = u.resolve(arg), u.resolve(result)
        if src is not None and dst is not None and src.is_float and dst.is_integer:
            raise TypeCheckError(f"cast from {src} to {dst} is not supported", node.span)

    inputs, outputs, triggers, assumptions, assertions, imports = [], [], [], [], [], []
    for d in items:
        if isinstance(d, InputDecl):
            inputs.append(d)
        elif isinstance(d, OutputDecl):
            ty = u.resolve(stream_vars[d.name])
            if ty is None:
                raise TypeCheckError(f"cannot infer the type of output {d.name!r}", d.span)
            outputs.append(replace(d, type=ty, expr=inf.annotate(d.expr)))
        elif isinstance(d, TriggerDecl):
            triggers.append(replace(d, condition=inf.annotate(d.condition)))
        elif isinstance(d, AnnotationDecl):
            target = assumptions if d.kind == "assume" else assertions
            target.append(replace(d, formula=inf.annotate(d.formula)))
        elif isinstance(d, ImportDecl):
            imports.append(d.module)
    return Specification(tuple(inputs), tuple(outputs), tuple(triggers),
                         tuple(assumptions), tuple(assertions), tuple(imports))
