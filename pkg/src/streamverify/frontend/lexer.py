"""Tokenizer for the specification language."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from ..errors import LexError, Span

KEYWORDS = frozenset({
    "input", "output", "trigger", "trigger_once", "assume", "assert", "import",
    "if", "then", "else", "and", "or", "not", "true", "false",
})

# Unicode spellings normalized to their ASCII operator.
ALIASES = {
    "∨": "or", "∧": "and", "¬": "!", "≤": "<=", "≥": ">=", "≠": "!=", "→": "->",
    "||": "or", "&&": "and", "=": "==", "not": "!",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<op>:=|\.\.|->|<=|>=|==|!=|&&|\|\||[∨∧¬≤≥≠→:,()\[\].<>=!+\-*/@])
  | (?P<ident>[^\W\d]\w*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "keyword" | "int" | "float" | "string" | "op" | "eof"
    text: str
    span: Span

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.span})"


def tokenize(text: str) -> Iterator[Token]:
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LexError(f"unexpected character {text[pos]!r}", Span(line, pos - line_start + 1))
        kind = m.lastgroup
        raw = m.group()
        span = Span(line, pos - line_start + 1, line, m.end() - line_start + 1)
        pos = m.end()
        if kind == "nl":
            line += 1
            line_start = pos
            continue
        if kind in ("ws", "comment"):
            continue
        if kind == "ident":
            if raw in ALIASES:
                yield Token("op", ALIASES[raw], span)
            elif raw in KEYWORDS:
                yield Token("keyword", raw, span)
            else:
                yield Token("ident", raw, span)
            continue
        if kind == "op":
            raw = ALIASES.get(raw, raw)
            if raw in ("and", "or"):
                yield Token("keyword", raw, span)
                continue
        if kind == "string":
            raw = re.sub(r"\\(.)", r"\1", raw[1:-1])
        yield Token(kind, raw, span)
    yield Token("eof", "", Span(line, pos - line_start + 1))
