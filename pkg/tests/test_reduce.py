import pytest
from hypothesis import given, strategies as st

from dynred.corpus import random_program
from dynred.explicit import build_ts
from dynred.instrument import base_of, instrument
from dynred.reduce import bounded_reach, format_reduced_trace, reduced_reach

from conftest import LOOP2, prog

# original states, original transitions, instrumented states,
# brtrans external states, xtrans external states, verdict
FROZEN = {
    "fig1": (68, 104, 363, 35, 35, "SAFE"),
    "fig2": (280, 494, 3813, 78, 156, "SAFE"),
    "fig3": (9, 12, 25, 4, 4, "SAFE"),
    "fig4": (62, 88, 338, 39, 39, "VIOLATED"),
    "fig5_inserts": (973, 2364, 10513, 379, 427, "SAFE"),
    "fig5_lookups": (315, 802, 2509, 118, 145, "SAFE"),
    "fig5_mixed": (405, 1004, 3729, 170, 194, "SAFE"),
    "fig6": (245, 462, 1785, 37, 107, "SAFE"),
    "dynlock": (2131, 5162, 21045, 723, 905, "SAFE"),
}


@pytest.mark.parametrize("name", sorted(FROZEN))
def test_frozen_state_counts(name, corpus):
    orig, trans, inst, br, xr, verdict = FROZEN[name]
    ip = instrument(corpus[name])
    full = build_ts(ip.program)
    assert (full.n_states, full.n_transitions) == (orig, trans)
    assert build_ts(ip).n_states == inst
    rb = reduced_reach(ip, "brtrans")
    rx = reduced_reach(ip, "xtrans")
    assert (rb.external_states, rx.external_states) == (br, xr)
    assert rb.name == rx.name == verdict


def test_straight_line_pair_collapses_to_four_states(corpus):
    r = reduced_reach(corpus["fig3"], "brtrans")
    assert r.safe and r.external_states == 4


def test_lookup_workload_shrinks_well_below_half(corpus):
    ip = instrument(corpus["fig5_lookups"])
    r = reduced_reach(ip, "brtrans")
    assert r.external_states / build_ts(ip).n_states <= 0.5


def _final_data(ip, states):
    p = ip.program
    xs, ys = p.layout.slot_of["x"], p.layout.slot_of["y"]
    out = set()
    for s in states:
        if all(it.cfg.locations[base_of(pc)] in ("end", "error")
               for it, pc in zip(ip.threads, s[0])):
            out.add((s[1][xs], s[1][ys]))
    return out


def test_racing_writers_reduced_finals_match_full(corpus):
    ip = instrument(corpus["fig4"])
    full = _final_data(ip, build_ts(ip).states)
    for rel in ("brtrans", "xtrans"):
        red = _final_data(ip, reduced_reach(ip, rel).states)
        assert red == full
        assert {(1, 2), (2, 2)} <= red


def test_violation_trace_replays_blocks(corpus):
    ip = instrument(corpus["fig4"])
    r = reduced_reach(ip, "brtrans")
    assert r.trace and r.trace[0].source == ip.initial()
    for a, b in zip(r.trace, r.trace[1:]):
        assert a.target == b.source
    assert ip.is_error(r.trace[-1].target)
    text = format_reduced_trace(ip, r)
    assert "--" in text and "(T" in text


def test_report_has_the_expected_fields(corpus):
    text = reduced_reach(corpus["fig3"]).report()
    for key in ("verdict: SAFE", "relation: brtrans", "external_states: 4", "blocks:",
                "max_block_len:"):
        assert key in text


def test_single_looping_thread_terminates():
    r = reduced_reach(prog(LOOP2), "xtrans")
    assert r.safe and r.external_states >= 1


def test_unknown_relation_is_rejected():
    with pytest.raises(ValueError):
        reduced_reach(prog(LOOP2), "nope")


def test_bounded_reach_on_racing_writers(corpus):
    ip = instrument(corpus["fig4"])
    assert not bounded_reach(ip, 4)
    assert bounded_reach(ip, 5)


@given(st.integers(0, 10_000))
def test_reduced_states_are_reachable_and_at_block_boundaries(seed):
    ip = instrument(random_program(seed))
    full = set(build_ts(ip).states)
    for rel in ("brtrans", "xtrans"):
        r = reduced_reach(ip, rel)
        assert set(r.states) <= full
        for s in r.states:
            for i in range(ip.n_threads):
                assert ip.is_external(s, i) if rel == "brtrans" else ip.is_exposed(s, i)


@given(st.integers(0, 10_000))
def test_reduction_preserves_the_verdict(seed):
    ip = instrument(random_program(seed))
    full = build_ts(ip)
    expect = not full.error_ids
    assert reduced_reach(ip, "brtrans").safe == expect
    assert reduced_reach(ip, "xtrans").safe == expect
