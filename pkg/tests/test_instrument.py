import pytest
from hypothesis import given, strategies as st

from dynred.corpus import BENCHMARKS, random_program
from dynred.explicit import build_ts
from dynred.instrument import (TAG_L, TAG_LN, TAG_N, TAG_R, TAG_RN, base_of, bisim_key,
                               classify_phase, instrument, loc_id, state_bisim, tag_of)
from dynred.movers import TRUE

from conftest import LOOP2, prog

# tag-level moves allowed by the construction: a pre-commit run never follows a post-commit one
ALLOWED_TAG_MOVES = {
    (TAG_N, TAG_R), (TAG_N, TAG_L), (TAG_R, TAG_RN), (TAG_RN, TAG_R), (TAG_RN, TAG_L),
    (TAG_L, TAG_LN), (TAG_L, TAG_N), (TAG_LN, TAG_L),
}
ACTION_RULES = {"R1", "R2", "R5"}


def test_two_location_loop_rule_counts():
    it = instrument(prog(LOOP2)).threads[0]
    assert it.rule_counts() == {"R1": 4, "R2": 4, "R3": 2, "R4": 2, "R5": 1, "R6": 1}
    assert len(it.edges) == 14


def test_five_copies_per_location():
    ip = instrument(prog(LOOP2))
    it = ip.threads[0]
    assert it.n_locations == 5 * len(it.cfg.locations)
    assert {it.location_name(loc_id(0, t)) for t in range(5)} == \
        {"l1.N", "l1.R", "l1.L", "l1.Rn", "l1.Ln"}


def test_initial_location_is_the_external_copy():
    ip = instrument(prog(LOOP2))
    assert ip.threads[0].location_name(ip.initial()[0][0]) == "l1.N"
    assert classify_phase(ip.initial(), ip) == ("E",)


def test_edge_into_a_terminal_location_commits_unconditionally():
    it = instrument(prog("var x: int[0..1];\nthread T { l1: x := 1 goto end; }\n")).threads[0]
    into_end = [e for e in it.edges if e.rule in ("R1", "R2")
                and it.location_name(e.target).startswith("end")]
    assert into_end and all(e.guard == TRUE and tag_of(e.target) == TAG_L for e in into_end)


def test_phases_of_each_tag():
    ip = instrument(prog(LOOP2))
    names = {TAG_N: "E", TAG_R: "R", TAG_RN: "R", TAG_L: "L", TAG_LN: "L"}
    for tag, ph in names.items():
        assert ip.phase(((loc_id(0, tag),), ip.initial()[1]), 0) == ph


def test_error_sink_is_its_own_phase(corpus):
    ip = instrument(corpus["fig4"])
    ts = build_ts(ip)
    for s in ts.error_ids:
        assert "W" in classify_phase(ts.states[s], ip)


def test_state_bisim_examples():
    d = (0,)
    r, l, n, rn, ln = (loc_id(1, t) for t in (TAG_R, TAG_L, TAG_N, TAG_RN, TAG_LN))
    assert state_bisim(0, ((r, 5), d), ((l, 5), d))
    assert state_bisim(0, ((n, 5), d), ((rn, 5), d))
    assert state_bisim(0, ((ln, 5), d), ((n, 5), d))
    assert not state_bisim(0, ((r, 5), d), ((n, 5), d))
    assert not state_bisim(0, ((r, 5), d), ((r, 6), d))          # remote pc differs
    assert not state_bisim(0, ((r, 5), d), ((r, 5), (1,)))       # data differs
    assert not state_bisim(0, ((r, 5), d), ((loc_id(2, TAG_R), 5), d))


@given(st.integers(0, 10_000))
def test_bisim_key_agrees_with_the_relation(seed):
    ip = instrument(random_program(seed))
    ts = build_ts(ip)
    sts = ts.states[:40]
    for i in range(ip.n_threads):
        for a in sts:
            for b in sts:
                assert (bisim_key(i, a) == bisim_key(i, b)) == state_bisim(i, a, b)


def _check_shape(ip):
    for it in ip.threads:
        for e in it.edges:
            assert (tag_of(e.source), tag_of(e.target)) in ALLOWED_TAG_MOVES, e.rule
            if e.rule in ACTION_RULES:
                orig = it.cfg.edges[e.orig]
                assert it.cfg.locations[base_of(e.source)] == orig.source
                assert it.cfg.locations[base_of(e.target)] == orig.target
                assert e.action == orig.action
            else:
                assert base_of(e.source) == base_of(e.target)


@pytest.mark.parametrize("name", BENCHMARKS)
def test_corpus_follows_the_path_pattern(name, corpus):
    _check_shape(instrument(corpus[name]))


@given(st.integers(0, 10_000))
def test_random_programs_follow_the_path_pattern(seed):
    _check_shape(instrument(random_program(seed)))


@given(st.integers(0, 10_000))
def test_instrumentation_keeps_the_data_behaviour(seed):
    p = random_program(seed)
    ip = instrument(p)
    assert build_ts(ip).data_set() == build_ts(ip.program).data_set()


def test_text_dump_lists_rules_and_exposed(corpus):
    text = instrument(corpus["fig5_lookups"]).format_text()
    assert "exposed: {p.R}" in text
    assert "[R6]" in text and "[R1]" in text


def test_dot_dump_colours_by_tag():
    dot = instrument(prog(LOOP2)).to_dot()
    assert dot.startswith("digraph instrumented {")
    for colour in ("green", "orange", "red"):
        assert f"fillcolor={colour}" in dot


def test_unknown_mutation_is_rejected():
    with pytest.raises(ValueError):
        instrument(prog(LOOP2), mutation="nope")
