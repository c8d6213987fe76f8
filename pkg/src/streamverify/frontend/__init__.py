"""Parsing, type inference and desugaring of specification text."""
from .ast import Specification, RawSpecification, ValueType
from .desugar import desugar
from .parser import parse, parse_expression
from .pretty import pretty, pretty_expr
from .typecheck import infer_types


def load_spec(text: str, constants: dict[str, str] | None = None) -> Specification:
    """parse -> infer_types -> desugar."""
    return desugar(infer_types(parse(text), constants))


__all__ = [
    "Specification", "RawSpecification", "ValueType", "parse", "parse_expression",
    "infer_types", "desugar", "pretty", "pretty_expr", "load_spec",
]
