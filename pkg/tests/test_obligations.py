import itertools

import pytest
from hypothesis import given, strategies as st

from streamverify.analysis import UnfoldingWindow
from streamverify.encoder import Encoder
from streamverify.frontend import load_spec
from streamverify.interpreter import check_annotations
from streamverify.obligations import (
    FINITE_MODES, REFUTED, UNDECIDED, VERIFIED, TemplateParams, begin_count, begin_obligations,
    begin_params, div_obligations, end_obligation, end_params, finite_obligation, inductive_obligations,
    inductive_verdict, instantiate_template, run_obligation, run_params,
)
from streamverify.solver import check

from conftest import corpus_spec

GOLDEN_RUNNING = {
    "begin_N0": (0, "asm={0} asserted={} streams={0} goal={0}"),
    "begin_N1": (1, "asm={0,1} asserted={} streams={0,1} goal={0,1}"),
    "begin_N2": (2, "asm={0,1,2} asserted={} streams={0,1,2} goal={0,1}"),
    "begin_N3": (3, "asm={0,1,2,3} asserted={} streams={0,1,2,3} goal={0,1}"),
    "run": (6, "asm={1,2,3,4,5} asserted={2,4} streams={2,3,4} goal={3}"),
    "end": (4, "asm={1,2,3,4} asserted={2} streams={2,3,4} goal={3,4}"),
}


def test_running_example_golden_sets(running):
    obs = inductive_obligations(running)
    assert {ob.name: (ob.N, ob.params.describe()) for ob in obs} == GOLDEN_RUNNING
    assert [ob.kind for ob in obs] == ["begin"] * 4 + ["run", "end"]


def test_frozen_value_windows():
    spec = corpus_spec("frozen_value")
    run = run_obligation(spec)
    assert run.N == 15
    assert run.params.goal == {15}
    assert run.params.assumed == set(range(5, 16))
    end = end_obligation(spec)
    assert end.N == 15
    assert end.params.goal == {15}
    assert end.params.asserted == set(range(10, 15))
    assert len(begin_obligations(spec)) == 10


def test_offset_free_spec():
    spec = load_spec("input a: Int64\noutput o := a\nassert <x> o == a")
    obs = inductive_obligations(spec)
    assert [ob.name for ob in obs] == ["begin_N0", "run", "end"]
    assert all(ob.N == 0 for ob in obs)
    assert obs[1].params.asserted == frozenset()
    assert obs[0].params.goal == obs[2].params.goal == {0}


def test_begin_n0_clause_shape(running):
    ob = begin_obligations(running)[0]
    enc = ob.encoder
    (clause,) = ob.clauses
    assert clause.hypotheses == [
        enc.encode(running.assumptions[0].formula, 0), enc.equation("o1", 0), enc.equation("o2", 0),
    ]
    assert [p for p, _ in clause.goals] == [0]


def test_positions_are_validated(running):
    with pytest.raises(ValueError):
        instantiate_template(running, 2, TemplateParams.of([0, 3], [], [], [0]))


def test_induction_hypothesis_uses_assertions_only():
    spec = load_spec("input a: Int64\nassume <x> a[-1, 0] > 0\noutput o := a\nassert <x> o[-1, 1] > 0")
    ob = run_obligation(spec)
    enc = ob.encoder
    theta, psi = spec.assumptions[0].formula, spec.assertions[0].formula
    p = ob.params
    expected = ([enc.encode(theta, i) for i in sorted(p.assumed)]
                + [enc.encode(psi, i) for i in sorted(p.asserted)]
                + [enc.equation("o", i) for i in sorted(p.streams)])
    assert ob.clauses[0].hypotheses == expected


def test_one_clause_per_identifier():
    spec = load_spec("input a: Int64\nassume <p> a > 0\nassert <p> a > -1\nassert <q> a == a")
    ob = run_obligation(spec)
    assert [c.alpha for c in ob.clauses] == ["p", "q"]
    # q has no assumption: its hypotheses are only the equations (none here)
    assert ob.clauses[1].hypotheses == []


def test_empty_goal_is_valid_formula():
    spec = load_spec("input a: Bool\nassert <x> a")
    ob = instantiate_template(spec, 1, TemplateParams.of([0], [], [0, 1], []))
    assert "(=> " in ob.formula()
    assert ob.goal_positions == []


def test_finite_obligation_clauses(running):
    ob = finite_obligation(running, 2)
    assert [c.label for c in ob.clauses] == ["a1@0", "a1@1", "a1@2"]
    assert ob.name == "finite_N2" and ob.kind == "finite"
    with pytest.raises(ValueError):
        finite_obligation(running, 2, mode="bogus")


def test_script_has_no_function_definitions(running):
    script = run_obligation(running).script()
    assert "define-fun" not in script
    assert script.count("(check-sat)") == 1
    assert "(set-option :produce-models true)" in script
    assert "; asm={1,2,3,4,5} asserted={2,4} streams={2,3,4} goal={3}" in script


def test_div_obligations_cover_goal_positions():
    spec = load_spec("input a: Int64\ninput b: Int64\nassume <x> b > 0\noutput q := a / b\nassert <x> q == q")
    obs = div_obligations(spec)
    names = {ob.name for ob in obs}
    assert names == {"divcheck_begin_N0_q_d0_p0", "divcheck_run_q_d0_p0", "divcheck_end_q_d0_p0"}


def test_verdict_combination():
    assert inductive_verdict(["valid", "valid"]) == VERIFIED
    assert inductive_verdict([]) == VERIFIED
    assert inductive_verdict(["valid", "unknown", "invalid"]) == REFUTED
    assert inductive_verdict(["valid", "unknown"]) == UNDECIDED


# -- independent oracle for the position sets --------------------------------

def _oracle(kind, wp, wf, N):
    """Position predicates evaluated over a generous range, kept where true."""
    preds = {
        "begin": (lambda i: 0 <= i <= N, lambda i: False, lambda i: 0 <= i <= N,
                  lambda i: 0 <= i < max(1, min(N + 1, 2 * wp))),
        "run": (lambda i: wp <= i <= N - wf, lambda i: 2 * wp <= i <= N - 2 * wf and i != 3 * wp,
                lambda i: 2 * wp <= i <= N - 2 * wf, lambda i: i == 3 * wp),
        "end": (lambda i: wp <= i <= N, lambda i: 2 * wp <= i < 3 * wp,
                lambda i: 2 * wp <= i <= N, lambda i: 3 * wp <= i <= N),
    }[kind]
    return tuple(frozenset(i for i in range(-5, 60) if p(i)) for p in preds)


@given(st.integers(0, 4), st.integers(0, 4))
def test_position_sets_match_predicates(wp, wf):
    w = UnfoldingWindow(wp, wf)
    assert begin_count(w) == max(1, 2 * (wp + wf))
    for N in range(begin_count(w)):
        p = begin_params(w, N)
        assert (p.assumed, p.asserted, p.streams, p.goal) == _oracle("begin", wp, wf, N)
    N, p = run_params(w)
    assert N == 3 * (wp + wf)
    assert (p.assumed, p.asserted, p.streams, p.goal) == _oracle("run", wp, wf, N)
    N, p = end_params(w)
    assert N == 3 * wp + wf
    assert (p.assumed, p.asserted, p.streams, p.goal) == _oracle("end", wp, wf, N)
    for params, n in [(run_params(w)[1], run_params(w)[0]), (end_params(w)[1], end_params(w)[0])]:
        for s in (params.assumed, params.asserted, params.streams, params.goal):
            assert all(0 <= i <= n for i in s)
        # the induction hypothesis never covers a goal position
        assert not params.asserted & params.goal


# -- solver-backed -----------------------------------------------------------

@pytest.mark.solver
def test_offset_free_finite_is_valid():
    spec = load_spec("input a: Int64\noutput o := a\nassert <x> o == a")
    assert check(finite_obligation(spec, 0)).valid


@pytest.mark.solver
@pytest.mark.parametrize("N", range(0, 9))
def test_running_finite_matches_exhaustive_replay(running, N):
    # global reading: every admissible execution satisfies the assertion everywhere
    admissible = 0
    for bits in itertools.product([False, True], repeat=N + 1):
        v = check_annotations(running, {"reset": list(bits)})["a1"]
        if all(v.assumption_holds):
            admissible += 1
            assert all(v.assertion_holds), bits
    assert admissible > 0 or N == 0
    assert check(finite_obligation(running, N, mode="global")).valid


@pytest.mark.solver
def test_literal_mode_is_stricter(running):
    # equations only at the clause's own position leave neighbours free
    assert not check(finite_obligation(running, 1, mode="literal")).valid
    assert set(FINITE_MODES) == {"global", "pointwise", "literal"}


@pytest.mark.solver
def test_unlinked_assertion_must_hold_unconditionally():
    spec = load_spec("input a: Int64\nassert <x> a > 0")
    results = [check(ob) for ob in inductive_obligations(spec)]
    assert inductive_verdict(r.status for r in results) == REFUTED


@pytest.mark.solver
def test_empty_goal_checks_valid():
    spec = load_spec("input a: Bool\nassert <x> a")
    assert check(instantiate_template(spec, 1, TemplateParams.of([0], [], [0, 1], []))).valid
