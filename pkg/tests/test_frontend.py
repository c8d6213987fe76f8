from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from streamverify.errors import DesugarError, ParseError, TypeCheckError, UnsupportedSyntaxError
from streamverify.frontend import ValueType, desugar, infer_types, load_spec, parse, pretty
from streamverify.frontend.ast import (
    AnnotationDecl, Apply, Const, Ite, Offset, OutputDecl, RangeOffset, StreamRef, walk,
)

from conftest import RUNNING, corpus_text
from specgen import random_spec


def test_running_example_structure():
    raw = parse(RUNNING)
    assert len(raw.inputs) == 1
    assert len(raw.outputs) == 2
    kinds = [d.kind for d in raw.items if isinstance(d, AnnotationDecl)]
    assert kinds == ["assume", "assert"]


def test_single_input():
    raw = parse("input a: Int32")
    assert len(raw.inputs) == 1 and raw.outputs == []
    assert raw.inputs[0].type is ValueType.INT32


def test_self_reference_parses():
    raw = parse("output a := a.offset(by: 0).defaults(to: 0)")
    out = raw.outputs[0]
    assert isinstance(out.expr, Offset) and out.expr.offset == 0


def test_declarations_carry_spans():
    raw = parse(RUNNING)
    lines = [d.span.line for d in raw.items]
    assert lines == [1, 2, 3, 4, 5]


def test_duplicate_stream_name():
    with pytest.raises(ParseError, match="duplicate"):
        parse("input a: Int32\noutput a := 1")


def test_unknown_type_name():
    with pytest.raises(ParseError):
        parse("input a: Int128")


def test_syntax_error_lists_expected_tokens():
    with pytest.raises(ParseError) as info:
        parse("output x := (1 + 2")
    assert info.value.span is not None
    assert info.value.expected


def test_activation_clause_rejected():
    with pytest.raises(UnsupportedSyntaxError, match="real-time"):
        parse("input a: Bool\ninput b: Bool\noutput p @ a or b := 1")


def test_import_recorded():
    spec = load_spec("import math\ninput x: Float64\noutput r := sqrt(x)")
    assert spec.imports == ("math",)


def test_math_functions_need_import():
    with pytest.raises(TypeCheckError):
        load_spec("input x: Float64\noutput r := sqrt(x)")


def test_unicode_aliases():
    a = load_spec("input x: Int32\ninput b: Bool\noutput y := ¬b ∧ x ≤ 3 ∨ x ≥ 5 ∧ x ≠ 4")
    b = load_spec("input x: Int32\ninput b: Bool\noutput y := !b and x <= 3 or x >= 5 and x != 4")
    assert a == b


def test_inferred_bool_output():
    spec = load_spec("input altitude: Float32\noutput altitude_bound := altitude > 200.0")
    assert spec.output("altitude_bound").type is ValueType.BOOL


def test_ill_typed_addition():
    with pytest.raises(TypeCheckError):
        load_spec("output x := 1 + true")


def test_no_implicit_int_to_float():
    with pytest.raises(TypeCheckError):
        load_spec("input a: Int32\ninput b: Float64\noutput c := a + b")
    spec = load_spec("input a: Int32\ninput b: Float64\noutput c := cast(a) + b")
    assert spec.output("c").type is ValueType.FLOAT64


def test_declared_type_mismatch():
    with pytest.raises(TypeCheckError):
        load_spec("output x: Bool := 3")


def test_integer_literal_range_check():
    with pytest.raises(TypeCheckError):
        load_spec("input a: Int32\noutput b := a + 3000000000")
    with pytest.raises(TypeCheckError):
        load_spec("input a: UInt64\noutput b := a + -1")


def test_annotations_must_be_boolean():
    with pytest.raises(TypeCheckError):
        load_spec("input a: Int32\nassume <x> a + 1")


def test_default_type_matches_target():
    with pytest.raises(TypeCheckError):
        load_spec("input a: Int32\noutput b := a[-1, true]")


def test_ctrl_output_types():
    spec = load_spec(corpus_text("ctrl_output"))
    assert len(spec.outputs) >= 20
    assert all(d.type is not None for d in spec.outputs)


def test_range_abbreviation_comparison_chain():
    spec = load_spec("input ax: Float64\noutput frozen_ax := ax[-5..0, 0.0, =]")
    e = spec.output("frozen_ax").expr
    assert isinstance(e, Apply) and e.op == "=="
    assert [a.offset for a in e.args[:-1]] == [-5, -4, -3, -2, -1]
    assert e.args[-1] == StreamRef("ax")
    assert all(a.default == Const(Fraction(0)) for a in e.args[:-1])


def test_range_abbreviation_arithmetic_fold():
    spec = load_spec("input a: Int64\noutput s := a[-2..1, 0, +]")
    e = spec.output("s").expr
    # ((a[-2] + a[-1]) + a) + a[1]
    assert e.op == "+" and e.args[1] == Offset("a", 1, Const(0))
    assert e.args[0].args[1] == StreamRef("a")


def test_range_abbreviation_requires_increasing_bounds():
    with pytest.raises(DesugarError):
        load_spec("input a: Int64\noutput s := a[1..1, 0, +]")


def test_zero_offset_is_plain_reference():
    spec = load_spec("input s: Int64\noutput t := s[0, 7]")
    assert spec.output("t").expr == StreamRef("s")


def test_trigger_once_desugaring():
    spec = load_spec('input fuel_half: Bool\ntrigger_once fuel_half "half"')
    assert len(spec.outputs) == 1
    aux = spec.outputs[0]
    assert aux.type is ValueType.BOOL
    assert not spec.triggers[0].once


def test_trigger_once_fires_once():
    from streamverify.interpreter import evaluate
    spec = load_spec('input fuel_half: Bool\ntrigger_once fuel_half "half"')
    result = evaluate(spec, {"fuel_half": [False, True, True]})
    assert [p for p, _ in result.triggers] == [1]


def test_abs_min_max_become_conditionals():
    spec = load_spec("import math\ninput a: Int64\ninput b: Int64\noutput m := max(abs(a), b)")
    assert isinstance(spec.output("m").expr, Ite)
    assert not any(isinstance(n, Apply) and n.op in ("abs", "min", "max")
                   for n in walk(spec.output("m").expr))


def test_named_constant_binding():
    text = "input a: Float64\nassert <x> a < eps"
    with pytest.raises(TypeCheckError):
        load_spec(text)
    spec = load_spec(text, {"eps": "0.1"})
    assert spec.assertions[0].formula.args[1] == Const(Fraction(1, 10))


CORE = (Const, StreamRef, Ite, Apply, Offset)


def _core_only(spec):
    return all(isinstance(n, CORE) and not isinstance(n, RangeOffset)
               for e in spec.expressions() for n in walk(e))


@pytest.mark.parametrize("name", ["running", "frozen_value", "ctrl_output", "imu_output", "fuel_level"])
def test_corpus_round_trip_and_idempotence(name):
    spec = load_spec(corpus_text(name))
    assert load_spec(pretty(spec)) == spec
    assert desugar(spec) == spec
    assert _core_only(spec)


@settings(max_examples=80, deadline=None)
@given(st.randoms(use_true_random=False))
def test_random_round_trip(rng):
    _, spec = random_spec(rng)
    assert load_spec(pretty(spec)) == spec
    assert desugar(spec) == spec
    assert _core_only(spec)


@given(lo=st.integers(-6, 3), width=st.integers(1, 6))
def test_range_fold_access_count(lo, width):
    hi = lo + width
    spec = load_spec(f"input a: Int64\noutput s := a[{lo}..{hi}, 0, +]")
    accesses = [n for n in walk(spec.output("s").expr) if isinstance(n, (Offset, StreamRef))]
    assert len(accesses) == hi - lo + 1
