import random
from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from streamverify.analysis import compute_window
from streamverify.errors import EvaluationError, TraceError
from streamverify.frontend import load_spec
from streamverify.frontend.ast import Const, Offset, map_children, stream_accesses, walk
from streamverify.interpreter import Evaluator, Trace, check_annotations, evaluate, format_value, parse_value
from streamverify.tracegen import TraceGenerator

from conftest import corpus_spec
from specgen import random_spec

SUM = corpus_spec("sum")


def test_running_example_values(running):
    result = evaluate(running, {"reset": [True, False, False]})
    assert result.outputs["o1"] == [0, 1, 2]
    assert result.outputs["o2"][1] == 3
    assert result.outputs["o2"] == [1, 3, 3]


def test_running_example_annotations(running):
    verdict = check_annotations(running, {"reset": [True, False, False]})["a1"]
    # reset[-1,f] or reset[1,f]: defaults are false at both ends
    assert verdict.assumption_holds == [False, True, False]
    assert verdict.assertion_holds == [True, True, True]
    assert verdict.respected


def test_sum_is_constant_zero():
    result = evaluate(SUM, {"a": [10, 10, 10]})
    assert result.outputs["sum"] == [0, 0, 0]
    assert check_annotations(SUM, {"a": [10, 10, 10]})["a1"].respected


def test_violation_positions():
    spec = load_spec("input x: Int64\nassume <p> x >= 0\nassert <p> x < 5")
    v = check_annotations(spec, {"x": [1, 7, -9, 5]})["p"]
    assert v.violations == [1, 3]
    assert not v.respected


def test_false_assumption_is_vacuous():
    spec = load_spec("input x: Int64\nassume <p> false\nassert <p> false")
    assert check_annotations(spec, {"x": [1, 2]})["p"].respected


def test_triggers_in_position_order():
    spec = load_spec('input x: Int64\ntrigger x > 2 "big"\ntrigger x < 0 "neg"')
    result = evaluate(spec, {"x": [3, -1, 0, 5]})
    assert result.triggers == [(0, "big"), (1, "neg"), (3, "big")]


def test_division_by_zero_names_stream_and_position():
    spec = load_spec("input x: Int64\ninput y: Int64\noutput q := x / y")
    with pytest.raises(EvaluationError) as info:
        evaluate(spec, {"x": [1, 2, 3], "y": [1, 0, 2]})
    assert info.value.stream == "q" and info.value.position == 1


def test_integer_division_truncates():
    spec = load_spec("input x: Int64\ninput y: Int64\noutput q := x / y")
    assert evaluate(spec, {"x": [7, -7, 7, -7], "y": [2, 2, -2, -2]}).outputs["q"] == [3, -3, -3, 3]


def test_default_is_evaluated_at_accessing_position():
    spec = load_spec("input t: Float64\noutput dt := t - t[-1, t - 0.1]")
    out = evaluate(spec, {"t": [Fraction(5), Fraction(6)]}, exact=True).outputs["dt"]
    assert out == [Fraction(1, 10), Fraction(1)]


def test_float_and_exact_modes_agree():
    spec = corpus_spec("frozen_value")
    cols = {"ax": [Fraction(1, 10) * k for k in range(8)]}
    approx = evaluate(spec, cols).outputs
    exact = evaluate(spec, cols, exact=True).outputs
    for name in approx:
        for a, b in zip(approx[name], exact[name]):
            assert a == pytest.approx(float(b)) if not isinstance(a, bool) else a == b


def test_csv_round_trip(running):
    trace = Trace.from_csv("reset\ntrue\nfalse\nfalse\n", running)
    assert trace.columns == {"reset": [True, False, False]}
    assert Trace.from_csv(trace.to_csv(), running).columns == trace.columns


def test_csv_any_column_order():
    spec = load_spec("input a: Int64\ninput b: Float64")
    trace = Trace.from_csv("b,a\n1.5e1,3\n-0.25,4\n", spec)
    assert trace.columns == {"a": [3, 4], "b": [Fraction(15), Fraction(-1, 4)]}


@pytest.mark.parametrize("text", [
    "other\ntrue\n",          # unknown column
    "reset\nmaybe\n",         # not a Boolean
    "",                        # empty
])
def test_csv_errors(running, text):
    with pytest.raises(TraceError):
        Trace.from_csv(text, running)


def test_validate_missing_column():
    spec = load_spec("input a: Int64\ninput b: Int64")
    with pytest.raises(TraceError, match="missing: b"):
        Trace({"a": [1]}).validate(spec)


def test_ragged_columns():
    with pytest.raises(TraceError):
        Trace({"a": [1, 2], "b": [1]})


def test_value_formatting():
    from streamverify.frontend import ValueType
    assert parse_value("true", ValueType.BOOL) is True
    assert parse_value("-12", ValueType.INT32) == -12
    assert parse_value("2.50", ValueType.FLOAT64) == Fraction(5, 2)
    assert format_value(Fraction(5, 2)) == "2.5"
    assert format_value(False) == "false"
    with pytest.raises(TraceError):
        parse_value("-1", ValueType.UINT64)


# -- properties ---------------------------------------------------------------

def _altered(e):
    def alt(c):
        v = c.value
        if isinstance(v, bool):
            return replace(c, value=not v)
        return replace(c, value=v + 7)

    def go(n):
        n = map_children(n, go)
        if isinstance(n, Offset) and isinstance(n.default, Const):
            return replace(n, default=alt(n.default))
        return n
    return go(e)


def _tainted(spec, n):
    """Cells whose value may depend on an out-of-range access (over-approximation)."""
    tainted = set()
    changed = True
    while changed:
        changed = False
        for d in spec.outputs:
            for j in range(n):
                if (d.name, j) in tainted:
                    continue
                bad = any(
                    isinstance(node, Offset) and not 0 <= j + node.offset < n
                    for node in walk(d.expr)
                ) or any((name, j + k) in tainted for name, k in stream_accesses(d.expr))
                if bad:
                    tainted.add((d.name, j))
                    changed = True
    return tainted


def _trace_for(spec, rng, length):
    return TraceGenerator(spec, rng, exact=True).generate(length)


@settings(max_examples=80, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(1, 8))
def test_default_independence(rng, length):
    _, spec = random_spec(rng)
    trace = _trace_for(spec, rng, length)
    assume(trace is not None)
    other = replace(spec, outputs=tuple(replace(d, expr=_altered(d.expr)) for d in spec.outputs))
    try:
        a = evaluate(spec, trace, exact=True).outputs
        b = evaluate(other, trace, exact=True).outputs
    except EvaluationError:
        assume(False)
    tainted = _tainted(spec, length)
    for name in a:
        for j in range(length):
            if (name, j) not in tainted:
                assert a[name][j] == b[name][j], (name, j)


@settings(max_examples=80, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(2, 8), st.data())
def test_prefix_stability_for_past_only_specs(rng, length, data):
    _, spec = random_spec(rng)
    assume(compute_window(spec).future == 0)
    trace = _trace_for(spec, rng, length)
    assume(trace is not None)
    cut = data.draw(st.integers(1, length))
    prefix = {k: v[:cut] for k, v in trace.columns.items()}
    try:
        full = evaluate(spec, trace, exact=True).outputs
        short = evaluate(spec, prefix, exact=True).outputs
    except EvaluationError:
        assume(False)
    for name in short:
        assert short[name] == full[name][:cut]


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_evaluation_is_deterministic(rng):
    _, spec = random_spec(rng)
    trace = _trace_for(spec, rng, 5)
    assume(trace is not None)
    ev = Evaluator(spec, exact=True)
    try:
        first = ev.evaluate(trace).outputs
    except EvaluationError:
        assume(False)
    assert ev.evaluate(trace).outputs == first
    assert evaluate(spec, trace, exact=True).outputs == first
