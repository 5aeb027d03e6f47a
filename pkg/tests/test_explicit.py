import re

import pytest
from hypothesis import given, strategies as st

from dynred.corpus import random_program
from dynred.explicit import (BudgetExceeded, build_ts, check_program, dot_ts, dump_dot,
                             format_report, reach_error)
from dynred.instrument import instrument
from dynred.lang import lower_sugar

from conftest import FIG4_BARE, LOOP2, prog


def test_fig3_grid_has_nine_states_and_twelve_transitions(corpus):
    ts = build_ts(corpus["fig3"])
    assert (ts.n_states, ts.n_transitions) == (9, 12)


def test_fig4_bare_system_has_fourteen_states():
    ts = build_ts(prog(FIG4_BARE))
    assert ts.n_states == 14


def test_single_step_program():
    ts = build_ts(prog("var x: int[0..1] = 0;\nthread T { a: x := 1 goto end; }\n"))
    assert (ts.n_states, ts.n_transitions) == (2, 1)


def test_fig4_violation_has_shortest_trace(corpus):
    ts = build_ts(lower_sugar(corpus["fig4"]))
    v = reach_error(ts)
    assert not v.safe
    labels = [ts.system.edge_label(*lab) for _, lab in v.trace[1:]]
    writes = [l.split(": ", 1)[1] for l in labels if ":=" in l and "done" not in l]
    # y := 1; x := y; then y := 2 gives (x, y) = (1, 2)
    assert writes[-3:] == ["y := 1", "x := y", "y := 2"] or writes[-2:] == ["x := y", "y := 2"]
    final = ts.states[v.trace[-1][0]][1]
    lay = ts.system.program.layout
    assert (final[lay.slot_of["x"]], final[lay.slot_of["y"]]) == (1, 2)


def test_trivially_true_assert_is_safe():
    v = check_program(prog("var x: int[0..1] = 0;\nthread T { a: assert(true) goto end; }\n"))
    assert v.safe


def test_lazy_init_is_safe(corpus):
    assert check_program(corpus["fig2"]).safe


def test_budget_is_an_explicit_error(corpus):
    with pytest.raises(BudgetExceeded):
        build_ts(corpus["fig6"], budget=50)


def test_budget_from_environment(monkeypatch, corpus):
    monkeypatch.setenv("DYNRED_BUDGET", "20")
    with pytest.raises(BudgetExceeded):
        build_ts(corpus["fig6"])


def test_report_format(corpus):
    ts = build_ts(lower_sugar(corpus["fig4"]))
    text = format_report(reach_error(ts), ts.system)
    lines = text.splitlines()
    assert lines[0] == "verdict: VIOLATED"
    assert re.fullmatch(r"states: \d+", lines[1])
    assert re.fullmatch(r"transitions: \d+", lines[2])
    assert lines[3] == "trace:"
    assert all(re.fullmatch(r"  \((T1|T2), .+\)", l) for l in lines[4:])


def test_dot_of_one_state_system():
    ts = build_ts(prog("var x: int[0..1] = 0;\nthread T { a: when (x == 1) skip goto end; }\n"))
    text = dot_ts(ts)
    assert text.count("->") == 0
    assert len(re.findall(r"^\s*s\d+ \[", text, re.M)) == 1


def test_dot_of_fig3(corpus):
    text = dump_dot(build_ts(corpus["fig3"]))
    assert text.count("->") == 12
    assert len(re.findall(r"^\s*s\d+ \[", text, re.M)) == 9


def test_dot_of_instrumented_loop_groups_ten_locations():
    text = dump_dot(instrument(prog(LOOP2)))
    assert len(re.findall(r"^\s*t0_\d+ \[label", text, re.M)) == 10
    assert "fillcolor=green" in text and "fillcolor=orange" in text and "fillcolor=red" in text


def test_numbering_is_deterministic(corpus):
    a, b = build_ts(corpus["fig1"]), build_ts(corpus["fig1"])
    assert a.states == b.states and a.transitions == b.transitions


@given(st.integers(0, 10_000))
def test_error_states_are_absorbing_in_instrumented_systems(seed):
    ip = instrument(random_program(seed))
    ts = build_ts(ip)
    errors = set(ts.error_ids)
    for s, _, _, t in ts.transitions:
        if s in errors:
            assert t in errors


@given(st.integers(0, 10_000))
def test_reversed_exploration_order_gives_the_same_space(seed):
    p = lower_sugar(random_program(seed))
    ts = build_ts(p)
    # depth-first in reverse thread order as an alternative exploration
    sysm = ts.system
    s0 = sysm.initial()
    seen, stack = {s0}, [s0]
    while stack:
        s = stack.pop()
        for _, _, t in reversed(list(sysm.successors(s))):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    assert seen == set(ts.states)
    assert any(sysm.is_error(s) for s in seen) == bool(ts.error_ids)
