"""Dynamic both-moving conditions: synthesis, evaluation and exhaustive verification."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

from .analysis import Analysis, expr_reads, lvalue_cells
from .lang import (AddrOf, ArrayRef, Cas, Const, Deref, Fault, Null, Program,
                   VarRef, action_exprs, compile_expr, format_expr, subexprs)


# ---------------------------------------------------------------------------
# Condition AST

@dataclass(frozen=True)
class TrueC:
    pass


@dataclass(frozen=True)
class FalseC:
    pass


@dataclass(frozen=True)
class PcNotAt:
    thread: str
    locations: tuple   # original location names, in thread order


@dataclass(frozen=True)
class PtrNeq:
    left: str
    right: str


@dataclass(frozen=True)
class DerefNeq:
    """Value stored in the cell denoted by ``target`` differs from ``value``."""
    target: object     # lvalue
    value: object      # Const or Null


@dataclass(frozen=True)
class VarCmp:
    var: str
    op: str
    value: int


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class NotC:
    operand: object


Condition = object
TRUE = TrueC()
FALSE = FalseC()


def make_and(parts) -> Condition:
    flat = []
    for c in parts:
        if isinstance(c, TrueC):
            continue
        if isinstance(c, FalseC):
            return FALSE
        for x in (c.parts if isinstance(c, And) else [c]):
            if x not in flat:
                flat.append(x)
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def make_not(c: Condition) -> Condition:
    if isinstance(c, TrueC):
        return FALSE
    if isinstance(c, FalseC):
        return TRUE
    if isinstance(c, NotC):
        return c.operand
    return NotC(c)


class HeuristicKind(enum.Enum):
    StaticMover = "StaticMover"
    MonotonicAtomic = "MonotonicAtomic"
    StaticDeref = "StaticDeref"
    Reachability = "Reachability"
    StaticNonMover = "StaticNonMover"


def format_condition(c: Condition) -> str:
    if isinstance(c, TrueC):
        return "true"
    if isinstance(c, FalseC):
        return "false"
    if isinstance(c, PcNotAt):
        return f"pc[{c.thread}] not in {{{','.join(c.locations)}}}"
    if isinstance(c, PtrNeq):
        return f"{c.left} != {c.right}"
    if isinstance(c, DerefNeq):
        return f"{format_expr(c.target)} != {format_expr(c.value)}"
    if isinstance(c, VarCmp):
        return f"{c.var} {c.op} {c.value}"
    if isinstance(c, And):
        return " && ".join(
            f"({format_condition(p)})" if isinstance(p, And) else format_condition(p)
            for p in c.parts)
    if isinstance(c, NotC):
        return f"!({format_condition(c.operand)})"
    raise TypeError(c)


def condition_atoms(c: Condition):
    if isinstance(c, And):
        for p in c.parts:
            yield from condition_atoms(p)
    elif isinstance(c, NotC):
        yield from condition_atoms(c.operand)
    else:
        yield c


# ---------------------------------------------------------------------------
# Evaluation

_CMP = {
    "==": lambda a, b: a == b, "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
}


def compile_condition(c: Condition, p: Program, instrumented: bool = False) -> Callable:
    """Compile to ``f(state) -> bool`` where ``state = (pc, data)``.

    On instrumented states a pc entry is ``5 * base + tag`` and PcNotAt
    compares the base location only.
    """
    lay = p.layout
    if isinstance(c, TrueC):
        return lambda s: True
    if isinstance(c, FalseC):
        return lambda s: False
    if isinstance(c, PcNotAt):
        j = p.thread_index[c.thread]
        idx = p.threads[j].loc_index
        bad = frozenset(idx[l] for l in c.locations)
        if instrumented:
            return lambda s: s[0][j] // 5 not in bad
        return lambda s: s[0][j] not in bad
    if isinstance(c, PtrNeq):
        a, b = lay.slot_of[c.left], lay.slot_of[c.right]
        return lambda s: s[1][a] != s[1][b]
    if isinstance(c, DerefNeq):
        fl = compile_expr(c.target, lay)
        fv = compile_expr(c.value, lay)

        def deref_neq(s):
            try:
                return fl(s[1]) != fv(s[1])
            except Fault:
                return False
        return deref_neq
    if isinstance(c, VarCmp):
        k, op, v = lay.slot_of[c.var], _CMP[c.op], c.value
        return lambda s: op(s[1][k], v)
    if isinstance(c, And):
        fs = [compile_condition(x, p, instrumented) for x in c.parts]
        return lambda s: all(f(s) for f in fs)
    if isinstance(c, NotC):
        f = compile_condition(c.operand, p, instrumented)
        return lambda s: not f(s)
    raise TypeError(c)


def eval_condition(c: Condition, state, p: Program, instrumented: Optional[bool] = None) -> bool:
    if instrumented is None:
        # instrumented pcs are 5-way replicated ids
        instrumented = any(pc >= len(t.locations) for pc, t in zip(state[0], p.threads))
    return compile_condition(c, p, instrumented)(state)


# ---------------------------------------------------------------------------
# Synthesis

def _derefs(a) -> set:
    out = set()
    for e in action_exprs(a):
        for s in subexprs(e):
            if isinstance(s, Deref):
                out.add(s.pointer)
    target = getattr(a, "target", None)
    if isinstance(target, Deref):
        out.add(target.pointer)
    return out


def _differs_from(value, c, an: Analysis) -> bool:
    """``value`` provably never equals the constant ``c`` once stored."""
    p = an.program
    if isinstance(c, Null):
        if isinstance(value, AddrOf):
            return True
        if isinstance(value, VarRef) and value.name in an.alias.sets:
            return 0 not in an.alias[value.name]
        return False
    if isinstance(value, Const):
        return value.value != c.value
    if isinstance(value, VarRef):
        for v in p.vars:
            if v.name == value.name:
                return not v.lo <= c.value <= v.hi
    return False


def _address_reads(lv, an: Analysis) -> set:
    lay = an.program.layout
    if isinstance(lv, ArrayRef):
        return expr_reads(lv.index, an.alias)
    if isinstance(lv, Deref):
        return {lay.slot_of[lv.pointer]}
    return set()


def _monotonic_atomic(i: int, k: int, conflicts: list, an: Analysis) -> Optional[Condition]:
    p = an.program
    alpha = p.threads[i].edges[k].action
    if not isinstance(alpha, Cas) or not isinstance(alpha.expected, (Const, Null)):
        return None
    c = alpha.expected
    if not _differs_from(alpha.new, c, an):
        return None
    region = frozenset(lvalue_cells(alpha.target, an.alias))
    addr = _address_reads(alpha.target, an)
    acc_a = an.access[i][k]
    if acc_a.writes & addr:
        return None
    # every remote writer of the region or of the address must be a
    # CAS that only ever replaces c, whether or not it interleaves with alpha
    for j, t in enumerate(p.threads):
        if j == i:
            continue
        for m, e in enumerate(t.edges):
            w = an.access[j][m].writes
            if w & addr:
                return None
            if w & region:
                b = e.action
                if not (isinstance(b, Cas) and b.expected == c and _differs_from(b.new, c, an)):
                    return None
    for j, m in conflicts:
        acc_b = an.access[j][m]
        overlap = (acc_a.writes & acc_b.footprint) | (acc_b.writes & acc_a.footprint)
        if not overlap <= region:
            return None
    return DerefNeq(alpha.target, c)


def _deref_footprint(a, pointer: str, an: Analysis) -> tuple:
    """Split a's footprint into cells reached through ``*pointer`` and the rest."""
    from .analysis import AliasMap, rw_sets
    blind = AliasMap(an.program, {q: frozenset() for q in an.alias.sets})
    direct = rw_sets(a, blind)
    cells = {x - 1 for x in an.alias[pointer] if x != 0}
    return cells, direct


def _static_deref(i: int, k: int, conflicts: list, an: Analysis) -> Optional[Condition]:
    p = an.program
    lay = p.layout
    alpha = p.threads[i].edges[k].action
    ptrs = _derefs(alpha)
    if len(ptrs) != 1:
        return None
    (ptr,) = ptrs
    ptr_slot = lay.slot_of[ptr]
    acc_a = an.access[i][k]
    if ptr_slot in acc_a.writes:
        return None
    cells_a, direct_a = _deref_footprint(alpha, ptr, an)
    deref_peers = []
    others = []
    for j, m in conflicts:
        beta = p.threads[j].edges[m].action
        bp = _derefs(beta)
        acc_b = an.access[j][m]
        if len(bp) == 1 and bp != {ptr}:
            (q,) = bp
            cells_b, direct_b = _deref_footprint(beta, q, an)
            overlap = (acc_a.writes & acc_b.footprint) | (acc_b.writes & acc_a.footprint)
            if overlap <= (cells_a & cells_b) and not (direct_a.footprint & cells_b) \
                    and not (direct_b.footprint & cells_a):
                deref_peers.append(q)
                continue
        others.append((j, m))
    if not deref_peers:
        return None
    watched = {ptr} | set(deref_peers)
    watched_slots = {lay.slot_of[q] for q in watched}
    for j, m in others:
        if not an.access[j][m].writes & watched_slots:
            return None
    parts = [PtrNeq(ptr, q) for q in sorted(set(deref_peers))]
    for j, t in enumerate(p.threads):
        if j == i:
            continue
        sources = {t.edges[m].source for m in range(len(t.edges))
                   if an.access[j][m].writes & watched_slots}
        locs = [l for l in t.locations if an.closure[j][l] & sources]
        if locs:
            parts.append(PcNotAt(t.name, tuple(locs)))
    return make_and(parts)


def _reachability(i: int, conflicts: list, an: Analysis) -> tuple:
    p = an.program
    parts = []
    nonmover = False
    for j, t in enumerate(p.threads):
        if j == i:
            continue
        sources = {t.edges[m].source for jj, m in conflicts if jj == j}
        if not sources:
            continue
        locs = [l for l in t.locations if an.closure[j][l] & sources]
        if len(locs) == len(t.locations):
            nonmover = True
        parts.append(PcNotAt(t.name, tuple(locs)))
    if nonmover:
        return FALSE, HeuristicKind.StaticNonMover
    return make_and(parts), HeuristicKind.Reachability


def synthesize_condition(i: int, k: int, an: Analysis) -> tuple:
    """Pick exactly one heuristic for edge ``k`` of thread ``i``.

    Order: no conflicts, monotonic CAS, pointer dereference, reachability.
    Heuristics are never combined since a disjunction of monotone
    conditions need not be monotone.
    """
    conflicts = an.conflicting_edges(i, k)
    if not conflicts:
        return TRUE, HeuristicKind.StaticMover
    c = _monotonic_atomic(i, k, conflicts, an)
    if c is not None:
        return c, HeuristicKind.MonotonicAtomic
    c = _static_deref(i, k, conflicts, an)
    if c is not None:
        return c, HeuristicKind.StaticDeref
    return _reachability(i, conflicts, an)


def synthesize_all(an: Analysis) -> list:
    """Per thread, per edge: (Condition, HeuristicKind)."""
    return [[synthesize_condition(i, k, an) for k in range(len(t.edges))]
            for i, t in enumerate(an.program.threads)]


def format_movers(an: Analysis, conds: Optional[list] = None) -> str:
    from .lang import format_action
    conds = conds or synthesize_all(an)
    lines = []
    for i, t in enumerate(an.program.threads):
        for k, e in enumerate(t.edges):
            c, kind = conds[i][k]
            lines.append(f"{t.name}.{e.source}#{k} [{format_action(e.action)}]: "
                         f"{kind.value}: {format_condition(c)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Exhaustive check of the moving-condition definition

@dataclass
class MoverReport:
    ok: bool
    check: str = ""
    diagram: tuple = ()     # state ids involved in the violating diagram

    def __bool__(self):
        return self.ok


def verify_both_mover(c: Condition, i: int, k: int, ts) -> MoverReport:
    """Check monotonicity and two-sided commutation of edge (i, k) under ``c``.

    ``ts`` is a complete transition system of the original program.  For
    every reachable state satisfying ``c``: neither edge k nor any remote
    step may falsify ``c``; every alpha-then-beta path closes as
    beta-then-alpha through a ``c``-state and vice versa.
    """
    p = ts.system.program
    holds = compile_condition(c, p)
    sat = [holds(s) for s in ts.states]
    step = {}
    out = [[] for _ in ts.states]
    for s, j, m, t in ts.transitions:
        step[(s, j, m)] = t
        out[s].append((j, m, t))
    for s, j, m, t in ts.transitions:
        if sat[s] and not sat[t] and (j != i or m == k):
            return MoverReport(False, "monotonic-alpha" if j == i else "monotonic-remote", (s, t))
    for s in range(len(ts.states)):
        if not sat[s]:
            continue
        for j, m, s1 in out[s]:
            if j == i and m == k:
                # s -alpha-> s1 -beta-> s2  must close as  s -beta-> t -alpha-> s2
                for j2, m2, s2 in out[s1]:
                    if j2 == i or not sat[s1]:
                        continue
                    t = step.get((s, j2, m2))
                    if t is None or not sat[t] or step.get((t, i, k)) != s2:
                        return MoverReport(False, "right-commute", (s, s1, s2))
            elif j != i:
                # s -beta-> s1 -alpha-> s2  must close as  s -alpha-> t -beta-> s2
                s2 = step.get((s1, i, k))
                if s2 is None or not sat[s1]:
                    continue
                t = step.get((s, i, k))
                if t is None or not sat[t] or step.get((t, j, m)) != s2:
                    return MoverReport(False, "left-commute", (s, s1, s2))
    return MoverReport(True)
