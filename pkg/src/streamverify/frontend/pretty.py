"""Render a specification back to parseable source text."""
from __future__ import annotations

from fractions import Fraction

from .ast import (
    COMPARISONS, AnnotationDecl, Apply, Const, Expr, Ite, Offset, RangeOffset,
    Specification, StreamRef,
)

_INFIX = {"+", "-", "*", "/", "and", "or", "->"} | set(COMPARISONS)


def format_fraction(q: Fraction) -> str:
    """Exact decimal text when the expansion terminates, else ``p/q``."""
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives, 1)
    scaled = abs(q) * 10**digits
    whole, frac = divmod(int(scaled), 10**digits)
    text = f"{whole}.{frac:0{digits}d}".rstrip("0")
    if text.endswith("."):
        text += "0"
    return ("-" if q < 0 else "") + text


def pretty_expr(e: Expr) -> str:
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        if e.text:
            return e.text
        if isinstance(e.value, Fraction):
            return format_fraction(e.value)
        return str(e.value)
    if isinstance(e, StreamRef):
        return e.name
    if isinstance(e, Offset):
        return f"{e.stream}[{e.offset}, {pretty_expr(e.default)}]"
    if isinstance(e, RangeOffset):
        return f"{e.stream}[{e.lo}..{e.hi}, {pretty_expr(e.default)}, {e.op}]"
    if isinstance(e, Ite):
        return f"(if {pretty_expr(e.cond)} then {pretty_expr(e.then)} else {pretty_expr(e.orelse)})"
    if isinstance(e, Apply):
        if e.op in _INFIX:
            return "(" + f" {e.op} ".join(pretty_expr(a) for a in e.args) + ")"
        if e.op == "neg":
            return f"-({pretty_expr(e.args[0])})"
        if e.op == "not":
            return f"!({pretty_expr(e.args[0])})"
        return f"{e.op}(" + ", ".join(pretty_expr(a) for a in e.args) + ")"
    raise TypeError(f"cannot print {e!r}")


def _quote(msg: str) -> str:
    return '"' + msg.replace("\\", "\\\\").replace('"', '\\"') + '"'


def pretty(spec: Specification) -> str:
    lines = [f"import {m}" for m in spec.imports]
    lines += [f"input {d.name}: {d.type}" for d in spec.inputs]
    for d in spec.outputs:
        ty = f": {d.type}" if d.type else ""
        lines.append(f"output {d.name}{ty} := {pretty_expr(d.expr)}")
    for t in spec.triggers:
        kw = "trigger_once" if t.once else "trigger"
        msg = f" {_quote(t.message)}" if t.message is not None else ""
        lines.append(f"{kw} {pretty_expr(t.condition)}{msg}")
    for a in spec.assumptions + spec.assertions:
        lines.append(f"{a.kind} <{a.ident}> {pretty_expr(a.formula)}")
    return "\n".join(lines) + "\n"
