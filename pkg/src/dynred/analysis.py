"""Static analyses: may-alias, access footprints, conflicts, CFG closure and feedback sets."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .lang import (AddrOf, Action, ArrayRef, Assign, BinOp, Cas, Const, Deref, Guard, Null,
                   Program, ThreadCfg, VarRef, action_exprs, conjuncts, subexprs)


@dataclass(frozen=True)
class AliasMap:
    """Pointer name -> may-point-to addresses (0 is null)."""
    program: Program
    sets: dict

    def __getitem__(self, name: str) -> frozenset:
        return self.sets[name]

    def names(self, name: str) -> list:
        lay = self.program.layout
        return [lay.address_name(a) for a in sorted(self.sets[name])]


def _pointer_sources(p: Program):
    """Yield (pointer, assigned expression) for every pointer-valued write."""
    ptrs = {q.name for q in p.pointers}
    for t in p.threads:
        for e in t.edges:
            a = e.action
            if isinstance(a, Assign) and isinstance(a.target, VarRef) and a.target.name in ptrs:
                yield a.target.name, a.value
            elif isinstance(a, Cas) and isinstance(a.target, VarRef) and a.target.name in ptrs:
                yield a.target.name, a.new


def may_alias(p: Program) -> AliasMap:
    """Flow-insensitive points-to sets, closed over pointer-to-pointer copies."""
    lay = p.layout
    sets = {}
    for q in p.pointers:
        sets[q.name] = {lay.address_of(q.init) if q.init is not None else 0}
    copies = []
    for name, value in _pointer_sources(p):
        if isinstance(value, Null):
            sets[name].add(0)
        elif isinstance(value, AddrOf):
            sets[name].add(lay.address_of(value))
        elif isinstance(value, VarRef):
            copies.append((name, value.name))
    changed = True
    while changed:
        changed = False
        for dst, src in copies:
            if not sets[src] <= sets[dst]:
                sets[dst] |= sets[src]
                changed = True
    return AliasMap(p, {k: frozenset(v) for k, v in sets.items()})


@dataclass(frozen=True)
class AccessSets:
    reads: frozenset
    writes: frozenset

    @property
    def footprint(self) -> frozenset:
        return self.reads | self.writes


def _deref_cells(name: str, am: AliasMap) -> set:
    return {a - 1 for a in am[name] if a != 0}


def _array_cells(ref: ArrayRef, lay) -> set:
    base, n = lay.array_base[ref.name]
    if isinstance(ref.index, Const):
        return {base + ref.index.value}
    return set(range(base, base + n))


def expr_reads(e, am: AliasMap) -> set:
    lay = am.program.layout
    out = set()
    for s in subexprs(e):
        if isinstance(s, VarRef):
            out.add(lay.slot_of[s.name])
        elif isinstance(s, ArrayRef):
            out |= _array_cells(s, lay)
        elif isinstance(s, Deref):
            out.add(lay.slot_of[s.pointer])
            out |= _deref_cells(s.pointer, am)
    return out


def lvalue_cells(lv, am: AliasMap) -> set:
    """Slots an lvalue may denote."""
    lay = am.program.layout
    if isinstance(lv, VarRef):
        return {lay.slot_of[lv.name]}
    if isinstance(lv, ArrayRef):
        return _array_cells(lv, lay)
    return _deref_cells(lv.pointer, am)


def _lvalue_address_reads(lv, am: AliasMap) -> set:
    lay = am.program.layout
    if isinstance(lv, ArrayRef):
        return expr_reads(lv.index, am)
    if isinstance(lv, Deref):
        return {lay.slot_of[lv.pointer]}
    return set()


def rw_sets(a: Action, am: AliasMap) -> AccessSets:
    """Conservative read/write footprint of an action, as slot indices."""
    reads, writes = set(), set()
    for e in action_exprs(a):
        reads |= expr_reads(e, am)
    if isinstance(a, Assign):
        reads |= _lvalue_address_reads(a.target, am)
        writes |= lvalue_cells(a.target, am)
    elif isinstance(a, Cas):
        cells = lvalue_cells(a.target, am)
        reads |= _lvalue_address_reads(a.target, am) | cells
        writes |= cells
        if a.result is not None:
            writes.add(am.program.layout.slot_of[a.result])
    return AccessSets(frozenset(reads), frozenset(writes))


def conflict(a: Action, b: Action, am: AliasMap) -> bool:
    ra, rb = rw_sets(a, am), rw_sets(b, am)
    return bool(ra.writes & rb.footprint) or bool(rb.writes & ra.footprint)


def reach_closure(cfg: ThreadCfg) -> dict:
    """Location -> frozenset of locations reachable in zero or more edges."""
    succ = {l: [] for l in cfg.locations}
    for e in cfg.edges:
        succ[e.source].append(e.target)
    out = {}
    for l in cfg.locations:
        seen = {l}
        stack = [l]
        while stack:
            for m in succ[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        out[l] = frozenset(seen)
    return out


def back_edge_targets(n: int, succ: list, roots: list) -> list:
    """Targets of DFS back edges, visiting ``roots`` first and then all nodes by id."""
    WHITE, GREY, BLACK = 0, 1, 2
    colour = [WHITE] * n
    targets = []
    for r in list(roots) + list(range(n)):
        if colour[r] != WHITE:
            continue
        colour[r] = GREY
        stack = [(r, iter(succ[r]))]
        while stack:
            node, it = stack[-1]
            for m in it:
                if colour[m] == WHITE:
                    colour[m] = GREY
                    stack.append((m, iter(succ[m])))
                    break
                if colour[m] == GREY and m not in targets:
                    targets.append(m)
            else:
                colour[node] = BLACK
                stack.pop()
    return targets


def is_acyclic(n: int, succ: list, removed=()) -> bool:
    removed = set(removed)
    indeg = [0] * n
    for u in range(n):
        if u in removed:
            continue
        for v in succ[u]:
            if v not in removed:
                indeg[v] += 1
    queue = [u for u in range(n) if u not in removed and indeg[u] == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for v in succ[u]:
            if v in removed:
                continue
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen == n - len(removed)


def _cfg_succ(cfg: ThreadCfg) -> list:
    idx = cfg.loc_index
    succ = [[] for _ in cfg.locations]
    for e in cfg.edges:
        succ[idx[e.source]].append(idx[e.target])
    return succ


def compute_lfs(cfg: ThreadCfg) -> frozenset:
    """DFS back-edge targets plus every terminal non-sink location."""
    idx = cfg.loc_index
    targets = back_edge_targets(len(cfg.locations), _cfg_succ(cfg), [idx[cfg.initial]])
    out = {cfg.locations[k] for k in targets}
    out.update(cfg.terminal_locations())
    return frozenset(out)


class InternalError(Exception):
    """A structural invariant that construction should guarantee did not hold."""


def compute_lfs_refined(it) -> frozenset:
    """Exposed pre-commit locations of an instrumented thread.

    Back-edge targets of the instrumented graph with all external (N)
    locations removed.  Targets tagged R' are replaced by their R twin,
    which is their only predecessor.
    """
    from .instrument import TAG_N, TAG_R, TAG_RN, tag_of, base_of, loc_id

    n = it.n_locations
    succ = [[] for _ in range(n)]
    for e in it.edges:
        if tag_of(e.source) != TAG_N and tag_of(e.target) != TAG_N:
            succ[e.source].append(e.target)
    keep = [u for u in range(n) if tag_of(u) != TAG_N]
    for u in range(n):
        if tag_of(u) == TAG_N:
            succ[u] = []
    exposed = set()
    for t in back_edge_targets(n, succ, keep):
        if tag_of(t) == TAG_RN:
            t = loc_id(base_of(t), TAG_R)
        if tag_of(t) != TAG_R:
            raise InternalError(f"cycle through non-R location {it.location_name(t)}")
        exposed.add(t)
    removed = exposed | {u for u in range(n) if tag_of(u) == TAG_N}
    if not is_acyclic(n, succ, removed):
        raise InternalError("refined feedback set does not break all cycles")
    return frozenset(exposed)


# ---------------------------------------------------------------------------
# Interference between threads

def _done_guards(a: Action, p: Program) -> set:
    """Threads whose completion flag is a top-level conjunct ``done == 1`` of a's guard."""
    flag_owner = {v: p.thread_index[t] for t, v in p.completion}
    cond = a.cond if isinstance(a, Guard) else getattr(a, "when", None)
    out = set()
    if cond is None:
        return out
    for c in conjuncts(cond):
        if isinstance(c, BinOp) and c.op == "==" and isinstance(c.left, VarRef) \
                and c.right == Const(1) and c.left.name in flag_owner:
            out.add(flag_owner[c.left.name])
    return out


class Analysis:
    """Cached static analysis results for one lowered program."""

    def __init__(self, p: Program):
        self.program = p
        self.alias = may_alias(p)

    @cached_property
    def access(self) -> list:
        return [[rw_sets(e.action, self.alias) for e in t.edges] for t in self.program.threads]

    @cached_property
    def closure(self) -> list:
        return [reach_closure(t) for t in self.program.threads]

    @cached_property
    def lfs(self) -> list:
        return [compute_lfs(t) for t in self.program.threads]

    @cached_property
    def _done(self) -> list:
        return [[_done_guards(e.action, self.program) for e in t.edges]
                for t in self.program.threads]

    def _finishes_later(self, i: int, k: int) -> bool:
        """Edge k of thread i lies strictly before the thread's completion edge."""
        t = self.program.threads[i]
        src = t.edges[k].source
        return "_fin" in t.loc_index and src != "_fin" and "_fin" in self.closure[i][src]

    def may_interleave(self, i: int, k: int, j: int, m: int) -> bool:
        """False when one edge needs the other's thread finished first.

        An edge guarded by ``done_i == 1`` is enabled only after thread i set
        its completion flag, which happens once and after every other edge
        that can still reach it.
        """
        if i in self._done[j][m] and self._finishes_later(i, k):
            return False
        if j in self._done[i][k] and self._finishes_later(j, m):
            return False
        return True

    def conflicts(self, i: int, k: int, j: int, m: int) -> bool:
        a, b = self.access[i][k], self.access[j][m]
        if not (a.writes & b.footprint or b.writes & a.footprint):
            return False
        return self.may_interleave(i, k, j, m)

    def conflicting_edges(self, i: int, k: int) -> list:
        """Remote edges (j, m) that conflict with edge k of thread i."""
        out = []
        for j, t in enumerate(self.program.threads):
            if j == i:
                continue
            for m in range(len(t.edges)):
                if self.conflicts(i, k, j, m):
                    out.append((j, m))
        return out

    def slot_names(self, slots) -> list:
        names = self.program.layout.slot_names
        return [names[s] for s in sorted(slots)]


def analyze(p: Program) -> Analysis:
    from .lang import lower_sugar
    return Analysis(lower_sugar(p))


def format_analysis(an: Analysis) -> str:
    """Text report: may-sets, per-edge conflicts and feedback sets."""
    p = an.program
    from .lang import format_action
    lines = ["pointers:"]
    for q in p.pointers:
        lines.append(f"  {q.name} -> {{{', '.join(an.alias.names(q.name))}}}")
    lines.append("conflicts:")
    for i, t in enumerate(p.threads):
        for k, e in enumerate(t.edges):
            cs = an.conflicting_edges(i, k)
            peer = ", ".join(f"{p.threads[j].name}.{p.threads[j].edges[m].source}#{m}" for j, m in cs)
            lines.append(f"  {t.name}.{e.source}#{k} [{format_action(e.action)}]: {peer or '-'}")
    lines.append("lfs:")
    for i, t in enumerate(p.threads):
        lines.append(f"  {t.name}: {{{', '.join(sorted(an.lfs[i]))}}}")
    return "\n".join(lines) + "\n"
