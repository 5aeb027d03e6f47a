"""Explicit-state exploration: the oracle every reduction is checked against."""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .lang import FAULT, Program, compile_action, format_action, format_data, lower_sugar

DEFAULT_BUDGET = 10 ** 6


class BudgetExceeded(Exception):
    """The state-count cap was hit; the result would be incomplete."""

    def __init__(self, budget: int, what: str = "states"):
        self.budget = budget
        super().__init__(f"budget of {budget} {what} exceeded")


def default_budget() -> int:
    env = os.environ.get("DYNRED_BUDGET")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_BUDGET


class ProgramSystem:
    """Interleaving semantics of a lowered program.

    States are ``(pc, data)`` with ``pc`` a tuple of location indices.
    """

    def __init__(self, program: Program):
        program = lower_sugar(program)
        self.program = program
        self.n_threads = len(program.threads)
        lay = program.layout
        # per thread, per location index: [(edge index, compiled action, target index)]
        self._out = []
        self._sinks = []
        for t in program.threads:
            idx = t.loc_index
            table = [[] for _ in t.locations]
            for k, e in enumerate(t.edges):
                table[idx[e.source]].append((k, compile_action(e.action, lay), idx[e.target]))
            self._out.append(table)
            self._sinks.append(idx[t.sink] if t.sink is not None else -1)

    def initial(self):
        return (tuple(t.loc_index[t.initial] for t in self.program.threads),
                self.program.layout.initial)

    def successors(self, state) -> Iterator[tuple]:
        pc, data = state
        for i in range(self.n_threads):
            for k, fn, tgt in self._out[i][pc[i]]:
                d2 = fn(data)
                if d2 is None or d2 is FAULT:
                    # faults are covered by the explicit fault edge to the sink
                    continue
                yield i, k, (pc[:i] + (tgt,) + pc[i + 1:], d2)

    def thread_successors(self, state, i: int) -> Iterator[tuple]:
        pc, data = state
        for k, fn, tgt in self._out[i][pc[i]]:
            d2 = fn(data)
            if d2 is None or d2 is FAULT:
                continue
            yield k, (pc[:i] + (tgt,) + pc[i + 1:], d2)

    def is_error(self, state) -> bool:
        pc = state[0]
        return any(pc[i] == s for i, s in enumerate(self._sinks))

    def location_name(self, i: int, loc: int) -> str:
        return self.program.threads[i].locations[loc]

    def edge_label(self, i: int, k: int) -> str:
        e = self.program.threads[i].edges[k]
        return f"{e.source}: {format_action(e.action)}"

    def format_state(self, state) -> str:
        pc, data = state
        locs = ", ".join(f"{t.name}@{self.location_name(i, pc[i])}"
                         for i, t in enumerate(self.program.threads))
        return f"[{locs} | {format_data(data, self.program)}]"


def as_system(obj):
    """Accept a Program or anything already exposing the system protocol."""
    if isinstance(obj, Program):
        return ProgramSystem(obj)
    return obj


@dataclass
class TransitionSystem:
    system: object
    states: list
    index: dict
    transitions: list            # (source id, thread, edge id, target id)
    error_ids: set
    parent: list                 # BFS tree: (parent id, thread, edge) or None
    initial: int = 0
    complete: bool = True

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return len(self.transitions)

    def out_edges(self) -> list:
        out = [[] for _ in self.states]
        for s, i, k, t in self.transitions:
            out[s].append((i, k, t))
        return out

    def data_set(self) -> set:
        return {s[1] for s in self.states}


def build_ts(p, budget: Optional[int] = None, stop_at_error: bool = False) -> TransitionSystem:
    """Breadth-first construction of the reachable transition system.

    Threads are expanded in declaration order and edges in source order, so
    numbering is deterministic.  With ``stop_at_error`` the search halts at
    the first error state (the result is then marked incomplete).
    """
    sysm = as_system(p)
    budget = default_budget() if budget is None else budget
    s0 = sysm.initial()
    states = [s0]
    index = {s0: 0}
    parent = [None]
    transitions = []
    errors = set()
    if sysm.is_error(s0):
        errors.add(0)
        if stop_at_error:
            return TransitionSystem(sysm, states, index, transitions, errors, parent, complete=False)
    queue = deque([0])
    while queue:
        sid = queue.popleft()
        for i, k, t in sysm.successors(states[sid]):
            tid = index.get(t)
            if tid is None:
                tid = len(states)
                if tid >= budget:
                    raise BudgetExceeded(budget)
                index[t] = tid
                states.append(t)
                parent.append((sid, i, k))
                queue.append(tid)
                if sysm.is_error(t):
                    errors.add(tid)
                    if stop_at_error:
                        transitions.append((sid, i, k, tid))
                        return TransitionSystem(sysm, states, index, transitions, errors,
                                                parent, complete=False)
            transitions.append((sid, i, k, tid))
    return TransitionSystem(sysm, states, index, transitions, errors, parent)


@dataclass
class Verdict:
    safe: bool
    trace: list = field(default_factory=list)   # [(state id | state, (thread, edge) | None)]
    states: int = 0
    transitions: int = 0

    @property
    def name(self) -> str:
        return "SAFE" if self.safe else "VIOLATED"


def trace_to(ts: TransitionSystem, target: int) -> list:
    """Path of ``(state id, label)`` pairs from the initial state to ``target``."""
    steps = []
    cur = target
    while ts.parent[cur] is not None:
        src, i, k = ts.parent[cur]
        steps.append((cur, (i, k)))
        cur = src
    steps.append((cur, None))
    steps.reverse()
    return steps


def reach_error(ts: TransitionSystem) -> Verdict:
    """Error verdict with a shortest witness (ids follow BFS layers)."""
    if not ts.error_ids:
        return Verdict(True, [], ts.n_states, ts.n_transitions)
    return Verdict(False, trace_to(ts, min(ts.error_ids)), ts.n_states, ts.n_transitions)


def check_program(p, budget: Optional[int] = None) -> Verdict:
    return reach_error(build_ts(p, budget))


def format_report(v: Verdict, system=None, show_trace: bool = True) -> str:
    lines = [f"verdict: {v.name}", f"states: {v.states}", f"transitions: {v.transitions}"]
    if show_trace and v.trace and system is not None:
        lines.append("trace:")
        for _, label in v.trace[1:]:
            i, k = label
            lines.append(f"  ({system_thread_name(system, i)}, {system.edge_label(i, k)})")
    return "\n".join(lines) + "\n"


def system_thread_name(system, i: int) -> str:
    return system.program.threads[i].name


# ---------------------------------------------------------------------------
# DOT output

TAG_COLOURS = {"N": "green", "R": "orange", "Rn": "orange", "L": "red", "Ln": "red"}


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dot_ts(ts: TransitionSystem) -> str:
    sysm = ts.system
    out = ["digraph ts {", "  node [shape=box, fontsize=10];"]
    for sid, s in enumerate(ts.states):
        attrs = [f"label={_q(sysm.format_state(s))}"]
        if sid in ts.error_ids:
            attrs.append("color=red")
        if sid == ts.initial:
            attrs.append("penwidth=2")
        out.append(f"  s{sid} [{', '.join(attrs)}];")
    for s, i, k, t in ts.transitions:
        out.append(f"  s{s} -> s{t} [label={_q(sysm.edge_label(i, k))}];")
    out.append("}")
    return "\n".join(out) + "\n"


def dot_cfg(p: Program) -> str:
    out = ["digraph cfg {"]
    for ti, t in enumerate(p.threads):
        out.append(f"  subgraph cluster_{ti} {{")
        out.append(f"    label={_q(t.name)};")
        for li, l in enumerate(t.locations):
            shape = "doublecircle" if l == t.sink else "circle"
            out.append(f"    t{ti}_{li} [label={_q(l)}, shape={shape}];")
        idx = t.loc_index
        for e in t.edges:
            out.append(f"    t{ti}_{idx[e.source]} -> t{ti}_{idx[e.target]} "
                       f"[label={_q(format_action(e.action))}];")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"


def dump_dot(obj) -> str:
    """GraphViz text for a transition system, a program CFG or an instrumented program."""
    if isinstance(obj, TransitionSystem):
        return dot_ts(obj)
    if isinstance(obj, Program):
        return dot_cfg(obj)
    if hasattr(obj, "to_dot"):
        return obj.to_dot()
    raise TypeError(f"cannot render {type(obj).__name__} as DOT")
