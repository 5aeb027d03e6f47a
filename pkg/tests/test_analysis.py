import itertools

import pytest
from hypothesis import given, strategies as st

from dynred.analysis import (analyze, compute_lfs, compute_lfs_refined, conflict, format_analysis,
                             is_acyclic, may_alias, reach_closure, rw_sets)
from dynred.corpus import BENCHMARKS, random_program
from dynred.explicit import build_ts
from dynred.instrument import TAG_N, instrument, tag_of
from dynred.lang import lower_sugar

from conftest import LOOP2, prog


def _slots(p, *names):
    return frozenset(p.layout.slot_of[n] for n in names)


def test_fig6_pointers_may_point_to_both_cells(corpus):
    am = may_alias(lower_sugar(corpus["fig6"]))
    assert am.names("p1") == ["x", "y"]
    assert am.names("p2") == ["x", "y"]


def test_pointer_never_reassigned_keeps_its_initialiser():
    am = may_alias(prog("var b: int[0..1];\nptr q = &b;\nthread T { a: *q := 1 goto end; }\n"))
    assert am.names("q") == ["b"]


def test_uninitialised_pointer_is_null():
    am = may_alias(prog("var b: int[0..1];\nptr q;\nthread T { a: skip goto end; }\n"))
    assert am.names("q") == ["null"]


def test_pointer_copies_are_closed():
    p = prog("var a: int[0..1];\nvar b: int[0..1];\nptr p = &a;\nptr q;\n"
             "thread T { l: q := p goto m; m: p := &b goto end; }\n")
    assert may_alias(p).names("q") == ["null", "a", "b"]


RW = """
var x: int[0..3];
var y: int[0..3];
var b: int[0..3];
var r: int[0..1];
array T[4]: int[0..3];
var index: int[0..3];
ptr p = &b;
thread W { a: skip goto end; }
"""


def test_rw_sets_of_copy():
    p = prog(RW)
    s = rw_sets(prog("var x: int[0..3];\nvar y: int[0..3];\nthread W { a: x := y goto end; }\n")
                .threads[0].edges[0].action, may_alias(p))
    assert s.reads == _slots(p, "y") and s.writes == _slots(p, "x")


def test_rw_sets_of_increment_through_pointer():
    p = prog(RW.replace("a: skip", "a: *p++"))
    s = rw_sets(p.threads[0].edges[0].action, may_alias(p))
    assert s.writes == _slots(p, "b")
    assert _slots(p, "b") <= s.reads


def test_cas_on_unknown_bucket_writes_whole_array():
    p = prog(RW.replace("a: skip", "a: cas(T[index], 0, 1, r)"))
    s = rw_sets(p.threads[0].edges[0].action, may_alias(p))
    base, n = p.layout.array_base["T"]
    assert frozenset(range(base, base + n)) | _slots(p, "r") == s.writes


def test_guard_writes_nothing():
    p = prog(RW.replace("a: skip", "a: when (x == 1) skip"))
    assert rw_sets(p.threads[0].edges[0].action, may_alias(p)).writes == frozenset()


def test_conflict_examples(corpus):
    p = prog("var x: int[0..2];\nvar y: int[0..2];\n"
             "thread A { a: x := 0 goto end; }\nthread B { b: x := y goto end; }\n")
    am = may_alias(p)
    assert conflict(p.threads[0].edges[0].action, p.threads[1].edges[0].action, am)
    f1 = lower_sugar(corpus["fig1"])
    am1 = may_alias(f1)
    t1, t2 = f1.thread("T1"), f1.thread("T2")
    inc = next(e.action for e in t1.edges if e.source == "k1")
    wq = next(e.action for e in t2.edges if e.source == "l3")
    b2 = next(e.action for e in t2.edges if e.source == "l1")
    c3 = next(e.action for e in t2.edges if e.source == "l2")
    assert not conflict(inc, wq, am1)          # p and q never alias
    assert not conflict(b2, c3, am1)           # disjoint footprints
    assert conflict(inc, b2, am1)              # *p is b


def test_reach_closure_chain_and_cycle():
    chain = prog("var x: int[0..1];\nthread T { l1: skip goto l2; l2: skip goto l3; "
                 "l3: skip goto end; }\n").threads[0]
    assert "l3" in reach_closure(chain)["l1"]
    assert "l1" not in reach_closure(chain)["l3"]
    cyc = prog(LOOP2).threads[0]
    rc = reach_closure(cyc)
    assert all(b in rc[a] for a in ("l1", "l2") for b in ("l1", "l2"))


def test_fig2_worker_locations_reach_the_read_loop(corpus):
    t = lower_sugar(corpus["fig2"]).thread("T1")
    rc = reach_closure(t)
    for l in ("_start", "c", "d", "w", "r"):
        assert "R" in rc[l]


def test_lfs_of_two_location_loop():
    assert compute_lfs(prog(LOOP2).threads[0]) == {"l1"}


def test_lfs_of_straight_line_is_the_terminal_location():
    t = prog("var x: int[0..1];\nthread T { l1: x := 1 goto end; }\n").threads[0]
    assert compute_lfs(t) == {"end"}


def _brute_force_fvs(t):
    locs = list(t.locations)
    idx = t.loc_index
    succ = [[] for _ in locs]
    for e in t.edges:
        succ[idx[e.source]].append(idx[e.target])
    for size in range(len(locs) + 1):
        for sub in itertools.combinations(range(len(locs)), size):
            if is_acyclic(len(locs), succ, sub):
                return size


def test_nested_loops_sharing_a_header_match_brute_force():
    t = prog("var x: int[0..1];\nthread T {\n  h: x := 0 goto a;\n  h: x := 1 goto b;\n"
             "  a: skip goto h;\n  b: skip goto c;\n  c: skip goto h;\n  c: skip goto end;\n}\n"
             ).threads[0]
    cyclic = compute_lfs(t) - set(t.terminal_locations())
    assert cyclic == {"h"}
    assert len(cyclic) == _brute_force_fvs(t)


@pytest.mark.parametrize("name", BENCHMARKS)
def test_lfs_breaks_every_cycle(name, corpus):
    an = analyze(corpus[name])
    for t, lfs in zip(an.program.threads, an.lfs):
        idx = t.loc_index
        succ = [[] for _ in t.locations]
        for e in t.edges:
            succ[idx[e.source]].append(idx[e.target])
        assert is_acyclic(len(t.locations), succ, [idx[l] for l in lfs])


def test_refined_lfs_of_straight_line_is_empty():
    ip = instrument(prog("var x: int[0..1];\nthread T { l1: x := 1 goto l2; l2: x := 0 goto end; }\n"))
    assert ip.threads[0].exposed == frozenset()


def test_refined_lfs_of_loop_is_one_pre_commit_location():
    it = instrument(prog(LOOP2)).threads[0]
    assert [it.location_name(x) for x in it.exposed] == ["l1.R"]


@pytest.mark.parametrize("name", ["fig5_inserts", "fig5_lookups", "fig5_mixed"])
def test_refined_lfs_of_probe_loop(name, corpus):
    ip = instrument(corpus[name])
    for it in ip.threads:
        assert len(it.exposed) >= 1
        assert compute_lfs_refined(it) == it.exposed
        succ = [[] for _ in range(it.n_locations)]
        for e in it.edges:
            if tag_of(e.source) != TAG_N and tag_of(e.target) != TAG_N:
                succ[e.source].append(e.target)
        removed = set(it.exposed) | {u for u in range(it.n_locations) if tag_of(u) == TAG_N}
        assert is_acyclic(it.n_locations, succ, removed)


def test_format_analysis_lists_pointers_conflicts_and_lfs(corpus):
    text = format_analysis(analyze(corpus["fig6"]))
    assert "p1 -> {x, y}" in text
    assert text.index("conflicts:") < text.index("lfs:")


def _commute_violations(p):
    """Pairs judged non-conflicting that fail to commute somewhere in the reachable TS."""
    an = analyze(p)
    ts = build_ts(an.program)
    out = ts.out_edges()
    bad = []
    for s in range(ts.n_states):
        for i, k, s1 in out[s]:
            for j, m, s3 in out[s1]:
                if j == i or an.conflicts(i, k, j, m):
                    continue
                alt = [t for (jj, mm, s2) in out[s] if (jj, mm) == (j, m)
                       for (ii, kk, t) in out[s2] if (ii, kk) == (i, k)]
                if s3 not in alt:
                    bad.append((s, i, k, j, m))
    return bad


@pytest.mark.parametrize("name", ["fig1", "fig2", "fig3", "fig4", "fig6", "fig5_lookups"])
def test_non_conflicting_edges_commute(name, corpus):
    assert _commute_violations(corpus[name]) == []


@given(st.integers(0, 10_000))
def test_non_conflicting_edges_commute_on_random_programs(seed):
    assert _commute_violations(random_program(seed)) == []


@given(st.integers(0, 10_000))
def test_alias_sets_cover_observed_pointer_values(seed):
    p = lower_sugar(random_program(seed))
    am = may_alias(p)
    ts = build_ts(p)
    for q in p.pointers:
        k = p.layout.slot_of[q.name]
        assert {d[k] for _, d in ts.states} <= am[q.name]
