import random

import pytest

from streamverify.frontend import load_spec
from streamverify.interpreter import check_annotations
from streamverify.tracegen import TraceGenerator, conjuncts, future_horizon, input_dependencies

from conftest import CORPUS, corpus_spec

NAMES = sorted(p.stem for p in CORPUS.glob("*.lola"))


@pytest.mark.parametrize("name", NAMES)
def test_traces_satisfy_assumptions(name):
    spec = corpus_spec(name)
    gen = TraceGenerator(spec, random.Random(7))
    traces = list(gen.traces(15, max_length=10))
    assert len(traces) == 15
    for t in traces:
        t.validate(spec)
        assert 1 <= t.length <= 10
        for v in check_annotations(spec, t).values():
            assert all(v.assumption_holds)


def test_infeasible_length_is_skipped(running):
    gen = TraceGenerator(running, random.Random(1))
    assert gen.generate(1) is None  # both defaults are false at a single position
    traces = list(gen.traces(10, max_length=3))
    assert all(t.length in (2, 3) for t in traces)
    assert 1 in gen.infeasible


def test_unsatisfiable_assumptions_give_up():
    spec = load_spec("input a: Int64\nassume <x> a > 0 and a < 0")
    gen = TraceGenerator(spec, random.Random(0), budget=500)
    with pytest.raises(RuntimeError):
        list(gen.traces(1, max_length=2))


def test_seeded_generation_is_reproducible(running):
    a = [t.columns for t in TraceGenerator(running, 3).traces(5, max_length=6)]
    b = [t.columns for t in TraceGenerator(running, 3).traces(5, max_length=6)]
    assert a == b


def test_helpers():
    spec = load_spec("input a: Int64\ninput b: Int64\noutput c := a + 1\noutput d := c[2, 0] + b\n"
                     "assume <x> a > 0 and (d > 0 and c > 1)")
    assert [str(c.op) for c in conjuncts(spec.assumptions[0].formula)] == [">", ">", ">"]
    deps = input_dependencies(spec)
    assert deps["c"] == {"a"} and deps["d"] == {"a", "b"}
    assert future_horizon(spec) == 2 * 3
