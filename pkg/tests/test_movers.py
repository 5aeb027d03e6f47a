import pytest

from dynred.analysis import analyze
from dynred.corpus import BENCHMARKS
from dynred.explicit import build_ts
from dynred.movers import (FALSE, TRUE, HeuristicKind, PcNotAt, VarCmp, eval_condition,
                           format_condition, make_and, synthesize_all, verify_both_mover)

from conftest import prog


def _cond(an, conds, thread, source, nth=0):
    t = an.program.thread(thread)
    i = an.program.threads.index(t)
    ks = [k for k, e in enumerate(t.edges) if e.source == source]
    return conds[i][ks[nth]]


@pytest.fixture(scope="module")
def synthesized(corpus):
    out = {}
    for name in ("fig1", "fig2", "fig5_inserts", "fig5_lookups", "fig6"):
        an = analyze(corpus[name])
        out[name] = (an, synthesize_all(an))
    return out


def test_fig1_increment_waits_for_the_other_thread(synthesized):
    an, conds = synthesized["fig1"]
    c, kind = _cond(an, conds, "T1", "k1")
    assert kind is HeuristicKind.Reachability
    assert format_condition(c) == "pc[T2] not in {l1}"


def test_fig1_disjoint_write_is_a_static_mover(synthesized):
    an, conds = synthesized["fig1"]
    assert _cond(an, conds, "T2", "l2") == (TRUE, HeuristicKind.StaticMover)


def test_fig2_read_loop_uses_reachability(synthesized):
    an, conds = synthesized["fig2"]
    c, kind = _cond(an, conds, "T1", "R")
    assert kind is HeuristicKind.Reachability
    assert format_condition(c) == "pc[T2] not in {_start,c,d,w}"


def test_fig2_publication_cas_is_monotonic(synthesized):
    an, conds = synthesized["fig2"]
    for t in ("T1", "T2"):
        c, kind = _cond(an, conds, t, "w")
        assert kind is HeuristicKind.MonotonicAtomic
        assert format_condition(c) == "data != null"


@pytest.mark.parametrize("name", ["fig5_inserts", "fig5_lookups"])
def test_fig5_probe_cas_is_monotonic_in_its_bucket(name, synthesized):
    an, conds = synthesized[name]
    for k, t in enumerate(an.program.threads, start=1):
        c, kind = _cond(an, conds, t.name, "p")
        assert kind is HeuristicKind.MonotonicAtomic
        assert format_condition(c) == f"T[idx{k}] != 0"


def test_fig6_worker_loop_uses_static_deref(synthesized):
    an, conds = synthesized["fig6"]
    c, kind = _cond(an, conds, "w1", "l")
    assert kind is HeuristicKind.StaticDeref
    assert format_condition(c) == "p1 != p2 && pc[main] not in {a,b,c}"
    c2, _ = _cond(an, conds, "w2", "l")
    assert format_condition(c2) == "p2 != p1 && pc[main] not in {a,b,c}"


@pytest.mark.parametrize("name", BENCHMARKS)
def test_synthesized_conditions_are_both_movers(name, corpus):
    an = analyze(corpus[name])
    ts = build_ts(an.program)
    for i, row in enumerate(synthesize_all(an)):
        for k, (c, _) in enumerate(row):
            rep = verify_both_mover(c, i, k, ts)
            assert rep.ok, (name, i, k, format_condition(c), rep.check)


def test_false_is_trivially_a_both_mover(corpus):
    an = analyze(corpus["fig4"])
    ts = build_ts(an.program)
    assert all(verify_both_mover(FALSE, i, k, ts).ok
               for i, t in enumerate(an.program.threads) for k in range(len(t.edges)))


def test_true_on_racing_writes_has_a_counterexample(corpus):
    an = analyze(corpus["fig4"])
    ts = build_ts(an.program)
    i = [t.name for t in an.program.threads].index("T2")
    k = next(k for k, e in enumerate(an.program.threads[i].edges) if e.source == "b1")
    rep = verify_both_mover(TRUE, i, k, ts)
    assert not rep.ok and rep.check and len(rep.diagram) >= 2


def test_eval_condition_examples():
    p = prog("var x: int[0..3];\nthread A { a1: x := 1 goto a2; a2: skip goto end; }\n"
             "thread B { b1: skip goto end; }\n")
    init = build_ts(p).states[0]
    assert eval_condition(PcNotAt("A", ("a2",)), init, p)
    assert not eval_condition(PcNotAt("A", ("a1",)), init, p)
    assert eval_condition(VarCmp("x", "==", 0), init, p)
    both = make_and([PcNotAt("A", ("a2",)), VarCmp("x", "!=", 0)])
    assert not eval_condition(both, init, p)
    assert eval_condition(TRUE, init, p) and not eval_condition(FALSE, init, p)


def test_make_and_flattens_and_drops_duplicates():
    a = PcNotAt("A", ("a1",))
    assert make_and([a, make_and([a, TRUE])]) == a
    assert make_and([a, FALSE]) == FALSE
    assert make_and([]) == TRUE
