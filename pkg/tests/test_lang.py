import pytest
from hypothesis import given, strategies as st

from dynred.corpus import BENCHMARKS, corpus_text, random_program, random_program_text
from dynred.lang import (FAULT, Assign, BinOp, Cas, Const, Deref, Guard, Null, ParseError,
                         Skip, VarRef, eval_action, lower_sugar, parse_program, print_program)

from conftest import FIG4_BARE, prog


def test_fig4_parses_to_two_threads_with_two_edges():
    p = prog(FIG4_BARE)
    assert [t.name for t in p.threads] == ["T1", "T2"]
    assert [len(t.edges) for t in p.threads] == [2, 2]


def test_empty_thread_is_rejected():
    with pytest.raises(ParseError):
        prog("var x: int[0..1] = 0;\nthread T {}\n")


def test_initial_value_out_of_range_is_rejected():
    with pytest.raises(ParseError):
        prog("var x: int[0..3] = 5;\nthread T { a: skip goto end; }\n")


@pytest.mark.parametrize("text", [
    "var x: int[0..1];\nvar x: int[0..1];\nthread T { a: skip goto end; }\n",
    "var x: int[0..1];\nthread T { a: y := 1 goto end; }\n",
    "var x: int[0..1];\nthread T { a: x := 1 goto nowhere; }\n",
    "var x: int[0..1];\nthread T { a: x := goto end; }\n",
])
def test_malformed_programs_are_rejected(text):
    with pytest.raises(ParseError):
        prog(text)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        prog("var x: int[0..1];\nthread T {\n  a: x := ; goto end;\n}\n")
    assert exc.value.line == 3


def test_increment_is_sugar_for_add_one():
    p = prog("var b: int[0..3] = 0;\nptr p = &b;\nthread T { a: *p++ goto end; }\n")
    a = p.threads[0].edges[0].action
    assert a == Assign(Deref("p"), BinOp("+", Deref("p"), Const(1)))


# --- evaluation -----------------------------------------------------------

XY = "var x: int[0..2] = 1;\nvar y: int[0..2] = 0;\nthread T { a: skip goto end; }\n"


def test_assign_writes_constant():
    p = prog(XY)
    assert eval_action(Assign(VarRef("x"), Const(0)), (1, 0), p) == frozenset({(0, 0)})


def test_guard_false_blocks():
    p = prog(XY)
    g = Guard(BinOp("==", VarRef("x"), Const(1)))
    assert eval_action(g, (0, 0), p) == frozenset()
    assert eval_action(g, (1, 0), p) == frozenset({(1, 0)})


def test_assignment_wraps_into_range():
    p = prog(XY)
    a = Assign(VarRef("x"), BinOp("+", VarRef("x"), Const(2)))
    assert eval_action(a, (2, 0), p) == frozenset({(1, 0)})


LAZY = """
var b1: int[0..1] = 0;
var r1: int[0..1] = 0;
ptr data = null;
ptr tmp = &b1;
thread T { a: skip goto end; }
"""


def test_cas_publishes_when_expected_matches():
    p = prog(LAZY)
    lay = p.layout
    d0 = lay.initial
    cas = Cas(VarRef("data"), Null(), VarRef("tmp"), "r1")
    (d1,) = eval_action(cas, d0, p)
    assert d1[lay.slot_of["data"]] == lay.slot_of["b1"] + 1
    assert d1[lay.slot_of["r1"]] == 1
    (d2,) = eval_action(cas, d1, p)
    assert d2[lay.slot_of["data"]] == d1[lay.slot_of["data"]]
    assert d2[lay.slot_of["r1"]] == 0


def test_null_dereference_is_a_fault():
    p = prog(LAZY)
    assert eval_action(Assign(VarRef("b1"), Deref("data")), p.layout.initial, p) is FAULT


def test_null_dereference_reaches_the_sink_after_lowering():
    from dynred.explicit import check_program
    p = prog("var x: int[0..1] = 0;\nptr q = null;\nthread T { a: x := *q goto end; }\n")
    low = lower_sugar(p)
    assert low.threads[0].sink == "error"
    assert not check_program(low).safe


def test_out_of_bounds_index_is_a_fault():
    p = prog("array A[2]: int[0..1];\nvar i: int[0..3] = 3;\nthread T { a: A[i] := 1 goto end; }\n")
    a = p.threads[0].edges[0].action
    assert eval_action(a, p.layout.initial, p) is FAULT


# --- lowering ---------------------------------------------------------------

def test_assert_lowers_to_two_guards_one_into_the_sink():
    p = prog(FIG4_BARE.replace("a2: y := 2 goto end;", "a2: assert(!(x == 1 && y == 2)) goto end;"))
    t = lower_sugar(p).threads[0]
    edges = [e for e in t.edges if e.source == "a2"]
    assert len(edges) == 2
    assert all(isinstance(e.action, Guard) for e in edges)
    assert sorted(e.target for e in edges) == ["end", "error"]


def test_start_lowers_to_flags_and_entry_guards(corpus):
    low = lower_sugar(corpus["fig2"])
    names = {v.name for v in low.vars}
    assert {"started_T1", "started_T2"} <= names
    for w in ("T1", "T2"):
        t = low.thread(w)
        assert t.initial == "_start"
        (entry,) = [e for e in t.edges if e.source == "_start"]
        assert entry.action == Guard(BinOp("==", VarRef(f"started_{w}"), Const(1)))


def test_join_waits_for_completion_flag(corpus):
    low = lower_sugar(corpus["fig6"])
    (j1,) = [e for e in low.thread("main").edges if e.source == "j1"]
    assert j1.action == Guard(BinOp("==", VarRef("done_w1"), Const(1)))
    fin = [e for e in low.thread("w1").edges if e.source == "_fin"]
    assert fin[0].action == Assign(VarRef("done_w1"), Const(1))


def test_program_without_sugar_is_unchanged():
    p = prog(FIG4_BARE)
    assert lower_sugar(p) == p


def test_lowering_is_idempotent(corpus):
    low = lower_sugar(corpus["fig6"])
    assert lower_sugar(low) is low


# --- printing ---------------------------------------------------------------

@pytest.mark.parametrize("name", BENCHMARKS)
def test_print_parse_round_trip_on_corpus(name):
    p = parse_program(corpus_text(name))
    assert parse_program(print_program(p)) == p


@given(st.integers(0, 10_000))
def test_print_parse_round_trip_on_random_programs(seed):
    p = random_program(seed)
    assert parse_program(print_program(p)) == p


@given(st.integers(0, 10_000))
def test_random_generator_is_deterministic(seed):
    assert random_program_text(seed) == random_program_text(seed)


def test_not_of_comparison_prints_with_parentheses():
    p = prog("var g1: int[0..1];\nvar g2: int[0..1];\nthread T { a: skip goto end; }\n"
             "assert(!(g1 == g2));\n")
    assert "assert(!(g1 == g2));" in print_program(p)
    assert parse_program(print_program(p)) == p


# --- semantic invariants ----------------------------------------------------

@given(st.integers(0, 10_000), st.data())
def test_actions_are_deterministic_and_range_closed(seed, data):
    p = lower_sugar(random_program(seed))
    lay = p.layout
    d = tuple(data.draw(st.integers(lo, hi)) for lo, hi in lay.ranges)
    for t in p.threads:
        for e in t.edges:
            out = eval_action(e.action, d, p)
            if out is FAULT:
                continue
            assert len(out) <= 1
            for d2 in out:
                assert all(lo <= v <= hi for v, (lo, hi) in zip(d2, lay.ranges))


def test_skip_is_identity():
    p = prog(XY)
    assert eval_action(Skip(), (2, 1), p) == frozenset({(2, 1)})
