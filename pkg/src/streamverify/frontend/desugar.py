"""Rewrite abbreviations into the five core expression forms."""
from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

from ..errors import DesugarError
from .ast import (
    COMPARISONS, Apply, Const, Expr, Ite, Offset, OutputDecl, RangeOffset, Specification,
    StreamRef, TriggerDecl, ValueType, map_children,
)

ONCE_PREFIX = "__once"


def _zero(ty: ValueType) -> Const:
    return Const(Fraction(0) if ty.is_float else 0, "0.0" if ty.is_float else "0", ty=ty)


def _access(stream: str, k: int, default: Expr, ty: ValueType | None, span) -> Expr:
    if k == 0:
        return StreamRef(stream, ty=ty, span=span)
    return Offset(stream, k, default, ty=ty, span=span)


def desugar_expr(e: Expr, types: dict[str, ValueType]) -> Expr:
    e = map_children(e, lambda c: desugar_expr(c, types))
    if isinstance(e, Offset) and e.offset == 0:
        return StreamRef(e.stream, ty=e.ty, span=e.span)
    if isinstance(e, RangeOffset):
        if e.lo >= e.hi:
            raise DesugarError(f"range {e.lo}..{e.hi} on {e.stream!r} must be increasing", e.span)
        sty = types.get(e.stream)
        terms = [_access(e.stream, k, e.default, sty, e.span) for k in range(e.lo, e.hi + 1)]
        if e.op in COMPARISONS:
            return Apply(e.op, tuple(terms), ty=e.ty, span=e.span)
        acc = terms[0]
        for t in terms[1:]:
            acc = Apply(e.op, (acc, t), ty=e.ty, span=e.span)
        return acc
    if isinstance(e, Apply) and e.op in ("abs", "min", "max"):
        ty = e.ty
        if e.op == "abs":
            (x,) = e.args
            return Ite(Apply("<", (x, _zero(ty)), ty=ValueType.BOOL), Apply("neg", (x,), ty=ty), x, ty=ty, span=e.span)
        a, b = e.args
        cmp = ">=" if e.op == "max" else "<="
        return Ite(Apply(cmp, (a, b), ty=ValueType.BOOL), a, b, ty=ty, span=e.span)
    return e


def _fresh_name(taken: set[str], index: int) -> str:
    name = f"{ONCE_PREFIX}{index}"
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def desugar(spec: Specification) -> Specification:
    """Return the core specification.

    ``trigger_once phi msg`` becomes an auxiliary Boolean output
    ``seen := phi or seen[-1, false]`` plus ``trigger phi and !seen[-1, false]``.
    Idempotent.
    """
    types = spec.stream_types
    taken = set(types)
    outputs = [replace(d, expr=desugar_expr(d.expr, types)) for d in spec.outputs]
    triggers = []
    B = ValueType.BOOL
    for i, t in enumerate(spec.triggers):
        cond = desugar_expr(t.condition, types)
        if t.once:
            seen = _fresh_name(taken, i)
            prev = Offset(seen, -1, Const(False, "false", ty=B), ty=B)
            outputs.append(OutputDecl(seen, B, Apply("or", (cond, prev), ty=B), t.span))
            cond = Apply("and", (cond, Apply("not", (prev,), ty=B)), ty=B)
        triggers.append(TriggerDecl(cond, t.message, False, t.span))
    return replace(
        spec,
        outputs=tuple(outputs),
        triggers=tuple(triggers),
        assumptions=tuple(replace(a, formula=desugar_expr(a.formula, types)) for a in spec.assumptions),
        assertions=tuple(replace(a, formula=desugar_expr(a.formula, types)) for a in spec.assertions),
    )
