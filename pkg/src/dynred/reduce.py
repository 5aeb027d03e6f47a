"""Block-reduced reachability over an instrumented program.

Two block relations are provided.  ``brtrans`` runs one thread from a
globally external state until it is external again.  ``xtrans`` also stops
at exposed pre-commit locations (the refined feedback set), which keeps
every block acyclic; from such a parked state only the parked thread may
continue.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .explicit import BudgetExceeded, default_budget
from .instrument import InstrumentedProgram, instrument

RELATIONS = ("brtrans", "xtrans")


@dataclass(frozen=True)
class ReducedStep:
    source: tuple
    thread: int
    path: tuple        # instrumented edge indices of ``thread``
    target: tuple


def sched_successors(ip: InstrumentedProgram, s, i: int) -> list:
    """Steps of thread i, allowed only while every other thread is external."""
    for j in range(ip.n_threads):
        if j != i and not ip.is_external(s, j):
            return []
    return list(ip.thread_successors(s, i))


def _blocks(ip: InstrumentedProgram, s, i: int, stop, budget: int) -> dict:
    """Depth-first closure through states where ``stop`` is false.

    Returns target -> one representative path of edge indices.
    """
    found = {}
    seen = {s}
    stack = [(s, ())]
    while stack:
        cur, path = stack.pop()
        for k, t in sched_successors(ip, cur, i):
            p2 = path + (k,)
            if stop(t):
                if t not in found:
                    found[t] = p2
                continue
            if t in seen:
                continue
            seen.add(t)
            if len(seen) > budget:
                raise BudgetExceeded(budget, "internal states")
            stack.append((t, p2))
    return found


def block_successors(ip: InstrumentedProgram, s, i: int, budget: Optional[int] = None) -> list:
    """brtrans successors of an all-external state ``s`` for thread i."""
    budget = default_budget() if budget is None else budget
    found = _blocks(ip, s, i, lambda t: ip.is_external(t, i), budget)
    return [ReducedStep(s, i, path, t) for t, path in found.items()]


def x_block_successors(ip: InstrumentedProgram, s, i: int, budget: Optional[int] = None) -> list:
    """Blocks of thread i that cut at external and exposed locations."""
    budget = default_budget() if budget is None else budget
    found = _blocks(ip, s, i, lambda t: ip.is_exposed(t, i), budget)
    return [ReducedStep(s, i, path, t) for t, path in found.items()]


def movable_threads(ip: InstrumentedProgram, s) -> list:
    """Threads the reduced search may run from ``s``.

    If a thread is parked mid-transaction only that thread may continue.
    """
    for i in range(ip.n_threads):
        if not ip.is_external(s, i):
            return [i]
    return list(range(ip.n_threads))


@dataclass
class ReducedResult:
    safe: bool
    relation: str
    external_states: int
    blocks: int
    max_block_len: int
    trace: list = field(default_factory=list)    # ReducedSteps from the initial state
    states: list = field(default_factory=list)
    full_states: Optional[int] = None

    @property
    def name(self) -> str:
        return "SAFE" if self.safe else "VIOLATED"

    @property
    def reduction_ratio(self) -> Optional[float]:
        if not self.full_states:
            return None
        return round(self.external_states / self.full_states, 4)

    def report(self) -> str:
        lines = [f"verdict: {self.name}", f"relation: {self.relation}",
                 f"external_states: {self.external_states}", f"blocks: {self.blocks}",
                 f"max_block_len: {self.max_block_len}"]
        if self.reduction_ratio is not None:
            lines.append(f"reduction_ratio: {self.reduction_ratio:.4f}")
        return "\n".join(lines) + "\n"


def reduced_reach(p, relation: str = "brtrans", budget: Optional[int] = None,
                  stop_at_error: bool = False) -> ReducedResult:
    """Breadth-first search over the chosen block relation from the initial state."""
    if relation not in RELATIONS:
        raise ValueError(f"unknown relation {relation!r}")
    ip = p if isinstance(p, InstrumentedProgram) else instrument(p)
    budget = default_budget() if budget is None else budget
    step_fn = block_successors if relation == "brtrans" else x_block_successors
    s0 = ip.initial()
    parent = {s0: None}
    order = [s0]
    queue = deque([s0])
    blocks = 0
    longest = 0
    error = s0 if ip.is_error(s0) else None
    while queue and not (error is not None and stop_at_error):
        s = queue.popleft()
        for i in movable_threads(ip, s):
            for step in step_fn(ip, s, i, budget):
                blocks += 1
                longest = max(longest, len(step.path))
                t = step.target
                if t in parent:
                    continue
                parent[t] = step
                order.append(t)
                if len(order) > budget:
                    raise BudgetExceeded(budget)
                if error is None and ip.is_error(t):
                    error = t
                queue.append(t)
    trace = []
    if error is not None:
        cur = error
        while parent[cur] is not None:
            trace.append(parent[cur])
            cur = parent[cur].source
        trace.reverse()
    return ReducedResult(error is None, relation, len(order), blocks, longest, trace, order)


def bounded_reach(ip: InstrumentedProgram, k: int, budget: Optional[int] = None) -> bool:
    """Is an error state reachable in at most ``k`` xtrans steps?"""
    layer = {ip.initial()}
    seen = set(layer)
    if any(ip.is_error(s) for s in layer):
        return True
    for _ in range(k):
        nxt = set()
        for s in layer:
            for i in movable_threads(ip, s):
                for step in x_block_successors(ip, s, i, budget):
                    if ip.is_error(step.target):
                        return True
                    if step.target not in seen:
                        seen.add(step.target)
                        nxt.add(step.target)
        layer = nxt
    return False


def format_reduced_trace(ip: InstrumentedProgram, result: ReducedResult) -> str:
    lines = []
    for step in result.trace:
        name = ip.threads[step.thread].cfg.name
        for k in step.path:
            lines.append(f"  ({name}, {ip.edge_label(step.thread, k)})")
        lines.append("  --")
    return "\n".join(lines) + ("\n" if lines else "")
