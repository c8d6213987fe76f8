"""Recursive-descent parser producing a :class:`RawSpecification`."""
from __future__ import annotations

from fractions import Fraction

from ..errors import ParseError, Span, UnsupportedSyntaxError
from .ast import (
    AnnotationDecl, Apply, Const, Declaration, Expr, ImportDecl, InputDecl, Ite,
    Offset, OutputDecl, RangeOffset, RawSpecification, StreamRef, TriggerDecl,
    ValueType,
)
from .lexer import Token, tokenize

_DECL_KEYWORDS = frozenset({"input", "output", "trigger", "trigger_once", "assume", "assert", "import"})
_CMP_OPS = frozenset({"<", "<=", ">", ">=", "==", "!="})
RANGE_OPS = frozenset({"==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "and", "or", "->"})


def parse(text: str) -> RawSpecification:
    """Parse specification source text.

    Raises :class:`ParseError` (with line/column and the expected token
    set) on malformed input, duplicate stream names, or unknown types.
    """
    return _Parser(text).parse_spec()


def parse_expression(text: str) -> Expr:
    p = _Parser(text)
    e = p.expr()
    p.expect_kind("eof")
    return e


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(tokenize(text))
        self.pos = 0

    # -- token helpers --------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "keyword") and self.tok.text == text

    def accept(self, text: str) -> Token | None:
        if self.at(text):
            return self.advance()
        return None

    def fail(self, expected: set[str] | frozenset[str]) -> ParseError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(f"unexpected {found}", t.span, frozenset(expected))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.fail({repr(text)})
        return self.advance()

    def expect_kind(self, kind: str) -> Token:
        if self.tok.kind != kind:
            raise self.fail({kind})
        return self.advance()

    def expect_word(self, word: str) -> Token:
        if self.tok.kind == "ident" and self.tok.text == word:
            return self.advance()
        raise self.fail({repr(word)})

    # -- declarations ---------------------------------------------------

    def parse_spec(self) -> RawSpecification:
        items: list[Declaration] = []
        seen: dict[str, Span] = {}
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind != "keyword" or t.text not in _DECL_KEYWORDS:
                raise self.fail({repr(k) for k in _DECL_KEYWORDS})
            for d in getattr(self, "decl_" + t.text)():
                if isinstance(d, (InputDecl, OutputDecl)):
                    if d.name in seen:
                        raise ParseError(f"duplicate stream name {d.name!r} (first declared at {seen[d.name]})", d.span)
                    seen[d.name] = d.span
                items.append(d)
        return RawSpecification(tuple(items))

    def decl_import(self):
        start = self.advance().span
        name = self.expect_kind("ident")
        yield ImportDecl(name.text, start)

    def type_name(self) -> ValueType:
        t = self.tok
        if t.kind != "ident":
            raise ParseError(f"unknown type {t.text!r}", t.span, frozenset(v.value for v in ValueType))
        vt = ValueType.from_name(t.text)
        if vt is None:
            raise ParseError(f"unknown type {t.text!r}", t.span, frozenset(v.value for v in ValueType))
        self.advance()
        return vt

    def decl_input(self):
        self.advance()
        names = [self.expect_kind("ident")]
        while self.accept(","):
            names.append(self.expect_kind("ident"))
        self.expect(":")
        types = [self.type_name()]
        while self.accept(","):
            types.append(self.type_name())
        if len(types) == 1:
            types = types * len(names)
        if len(types) != len(names):
            raise ParseError(f"{len(names)} input names but {len(types)} types", names[0].span)
        for n, ty in zip(names, types):
            yield InputDecl(n.text, ty, n.span)

    def decl_output(self):
        self.advance()
        name = self.expect_kind("ident")
        declared = None
        if self.accept(":"):
            declared = self.type_name()
        if self.at("@"):
            at = self.advance()
            self.expr()
            raise UnsupportedSyntaxError(
                f"activation condition '@' on output {name.text!r} is real-time extension syntax "
                "and is not supported; declare the output without it", at.span)
        self.expect(":=")
        e = self.expr()
        yield OutputDecl(name.text, declared, e, name.span)

    def _trigger(self, once: bool):
        start = self.advance().span
        cond = self.expr()
        msg = self.advance().text if self.tok.kind == "string" else None
        yield TriggerDecl(cond, msg, once, start)

    def decl_trigger(self):
        return self._trigger(False)

    def decl_trigger_once(self):
        return self._trigger(True)

    def _annotation(self, kind: str):
        start = self.advance().span
        self.expect("<")
        ident = self.expect_kind("ident")
        self.expect(">")
        yield AnnotationDecl(kind, ident.text, self.expr(), start)

    def decl_assume(self):
        return self._annotation("assume")

    def decl_assert(self):
        return self._annotation("assert")

    # -- expressions ----------------------------------------------------

    def expr(self) -> Expr:
        left = self.disjunction()
        if self.at("->"):
            t = self.advance()
            right = self.expr()
            return Apply("->", (left, right), span=t.span)
        return left

    def disjunction(self) -> Expr:
        e = self.conjunction()
        while self.at("or"):
            t = self.advance()
            e = Apply("or", (e, self.conjunction()), span=t.span)
        return e

    def conjunction(self) -> Expr:
        e = self.comparison()
        while self.at("and"):
            t = self.advance()
            e = Apply("and", (e, self.comparison()), span=t.span)
        return e

    def comparison(self) -> Expr:
        first = self.additive()
        operands, ops = [first], []
        span = None
        while self.tok.kind == "op" and self.tok.text in _CMP_OPS:
            t = self.advance()
            span = span or t.span
            ops.append(t.text)
            operands.append(self.additive())
        if not ops:
            return first
        if len(set(ops)) == 1:
            return Apply(ops[0], tuple(operands), span=span)
        # mixed chain such as 0 <= x < 3
        pairs = [Apply(op, (operands[i], operands[i + 1]), span=span) for i, op in enumerate(ops)]
        e = pairs[0]
        for p in pairs[1:]:
            e = Apply("and", (e, p), span=span)
        return e

    def additive(self) -> Expr:
        e = self.multiplicative()
        while self.at("+") or self.at("-"):
            t = self.advance()
            e = Apply(t.text, (e, self.multiplicative()), span=t.span)
        return e

    def multiplicative(self) -> Expr:
        e = self.unary()
        while self.at("*") or self.at("/"):
            t = self.advance()
            e = Apply(t.text, (e, self.unary()), span=t.span)
        return e

    def unary(self) -> Expr:
        if self.at("-"):
            t = self.advance()
            lit = self.tok
            if lit.kind in ("int", "float") and not (self.peek().kind == "op" and self.peek().text in (".", "[")):
                operand = self.primary()
                return Const(-operand.value, "-" + operand.text, span=t.span)
            return Apply("neg", (self.unary(),), span=t.span)
        if self.at("!"):
            t = self.advance()
            return Apply("not", (self.unary(),), span=t.span)
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while True:
            if self.at(".") and self.peek().kind == "ident" and self.peek().text == "offset":
                e = self.offset_call(e)
            elif self.at("["):
                e = self.offset_brackets(e)
            else:
                return e

    def _target(self, e: Expr) -> str:
        if not isinstance(e, StreamRef):
            raise ParseError("offset operators apply to stream names only", self.tok.span)
        return e.name

    def signed_int(self) -> int:
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        return sign * int(self.expect_kind("int").text)

    def default_expr(self, closer: str) -> Expr:
        t = self.tok
        # `f`/`t` are Boolean shorthands in default position only
        if t.kind == "ident" and t.text in ("f", "t") and self.peek().text in (closer, ","):
            self.advance()
            return Const(t.text == "t", "true" if t.text == "t" else "false", ty=ValueType.BOOL, span=t.span)
        return self.expr()

    def offset_call(self, e: Expr) -> Expr:
        name = self._target(e)
        start = self.advance().span
        self.expect_word("offset")
        self.expect("(")
        self.expect_word("by")
        self.expect(":")
        k = self.signed_int()
        self.expect(")")
        self.expect(".")
        self.expect_word("defaults")
        self.expect("(")
        self.expect_word("to")
        self.expect(":")
        d = self.default_expr(")")
        self.expect(")")
        return Offset(name, k, d, span=start)

    def offset_brackets(self, e: Expr) -> Expr:
        name = self._target(e)
        start = self.advance().span
        lo = self.signed_int()
        if self.accept(".."):
            hi = self.signed_int()
            self.expect(",")
            d = self.default_expr(",")
            self.expect(",")
            t = self.tok
            if t.kind not in ("op", "keyword") or t.text not in RANGE_OPS:
                raise self.fail(RANGE_OPS)
            self.advance()
            self.expect("]")
            return RangeOffset(name, lo, hi, d, t.text, span=start)
        self.expect(",")
        d = self.default_expr("]")
        self.expect("]")
        return Offset(name, lo, d, span=start)

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Const(int(t.text), t.text, span=t.span)
        if t.kind == "float":
            self.advance()
            return Const(Fraction(t.text), t.text, span=t.span)
        if t.kind == "keyword" and t.text in ("true", "false"):
            self.advance()
            return Const(t.text == "true", t.text, ty=ValueType.BOOL, span=t.span)
        if t.kind == "keyword" and t.text == "if":
            self.advance()
            cond = self.expr()
            self.expect("then")
            then = self.expr()
            self.expect("else")
            orelse = self.expr()
            return Ite(cond, then, orelse, span=t.span)
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
                return Apply(t.text, tuple(args), span=t.span)
            return StreamRef(t.text, span=t.span)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise self.fail({"literal", "identifier", "'('", "'if'", "'-'", "'!'"})
