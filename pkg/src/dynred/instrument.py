"""CFG instrumentation with dynamic moving conditions.

Every original location ``l`` is replicated five times: ``l.N`` (external),
``l.R`` and ``l.Rn`` (pre-commit), ``l.L`` and ``l.Ln`` (post-commit).
A replicated location is the integer ``5 * base + tag``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .analysis import Analysis, analyze, compute_lfs_refined, expr_reads
from .explicit import TAG_COLOURS, _q
from .lang import (FAULT, ArrayRef, Assign, BinOp, BoolConst, Cas, Deref, Guard, Not, Program,
                   Skip, ThreadCfg, action_exprs, compile_action, fault_expr, format_action,
                   format_data, subexprs)
from .movers import (FALSE, TRUE, Condition, compile_condition, format_condition, make_and,
                     make_not, synthesize_all)

TAG_N, TAG_R, TAG_L, TAG_RN, TAG_LN = range(5)
TAG_NAMES = ("N", "R", "L", "Rn", "Ln")
TOTALITY_CAP = 50_000


def loc_id(base: int, tag: int) -> int:
    return base * 5 + tag


def tag_of(loc: int) -> int:
    return loc % 5


def base_of(loc: int) -> int:
    return loc // 5


@dataclass(frozen=True)
class IEdge:
    source: int
    guard: Condition
    action: object
    target: int
    rule: str
    orig: Optional[int] = None     # index of the original edge for R1, R2 and R5


@dataclass
class InstrumentedThread:
    index: int
    cfg: ThreadCfg
    edges: list
    lfs: frozenset
    blocking: frozenset = frozenset()   # locations whose R4 condition was forced to false
    exposed: frozenset = frozenset()    # refined feedback set, filled after construction

    @property
    def n_locations(self) -> int:
        return 5 * len(self.cfg.locations)

    @property
    def initial(self) -> int:
        return loc_id(self.cfg.loc_index[self.cfg.initial], TAG_N)

    @property
    def sink_base(self) -> int:
        return self.cfg.loc_index[self.cfg.sink] if self.cfg.sink is not None else -1

    def sink_ids(self) -> list:
        b = self.sink_base
        return [] if b < 0 else [loc_id(b, t) for t in range(5)]

    def location_name(self, loc: int) -> str:
        return f"{self.cfg.locations[base_of(loc)]}.{TAG_NAMES[tag_of(loc)]}"

    def out_edges(self) -> list:
        out = [[] for _ in range(self.n_locations)]
        for k, e in enumerate(self.edges):
            out[e.source].append(k)
        return out

    def rule_counts(self) -> dict:
        counts = {}
        for e in self.edges:
            counts[e.rule] = counts.get(e.rule, 0) + 1
        return counts


def _enabling_reads(a, an: Analysis) -> set:
    reads = set()
    for e in action_exprs(a):
        reads |= expr_reads(e, an.alias)
    target = getattr(a, "target", None)
    if isinstance(target, Deref):
        reads.add(an.program.layout.slot_of[target.pointer])
    return reads


def _always_enabled(a) -> bool:
    if isinstance(a, Skip):
        return True
    if isinstance(a, (Assign, Cas)) and a.when is None:
        exprs = action_exprs(a) + [a.target]
        return not any(isinstance(s, (Deref, ArrayRef))
                       for e in exprs for s in subexprs(e))
    return False


_FLIP = {">=": "<", ">": "<=", "!=": "=="}


def _atomise(e, atoms: dict):
    """Boolean skeleton of ``e``: comparisons become numbered atoms."""
    if isinstance(e, BoolConst):
        return e.value
    if isinstance(e, Not):
        return ("not", _atomise(e.operand, atoms))
    if isinstance(e, BinOp) and e.op in ("&&", "||"):
        return (e.op, _atomise(e.left, atoms), _atomise(e.right, atoms))
    negated = False
    if isinstance(e, BinOp) and e.op in _FLIP:
        e = BinOp(_FLIP[e.op], e.left, e.right)
        negated = True
    key = atoms.setdefault(e, len(atoms))
    return ("not", ("atom", key)) if negated else ("atom", key)


def _eval_skeleton(t, bits) -> bool:
    if t is True or t is False:
        return t
    op = t[0]
    if op == "atom":
        return bits[t[1]]
    if op == "not":
        return not _eval_skeleton(t[1], bits)
    if op == "&&":
        return _eval_skeleton(t[1], bits) and _eval_skeleton(t[2], bits)
    return _eval_skeleton(t[1], bits) or _eval_skeleton(t[2], bits)


def _propositionally_total(actions: list, p: Program, max_atoms: int = 12) -> bool:
    """Enabling guards cover every truth assignment of their comparison atoms.

    Only fault-free actions take part; treating atoms as independent
    booleans over-approximates the stores, so a tautology here is a
    tautology over stores.
    """
    atoms = {}
    skeletons = []
    for a in actions:
        if fault_expr(a, p) is not None:
            continue
        cond = a.cond if isinstance(a, Guard) else getattr(a, "when", None)
        if cond is None:
            continue
        skeletons.append(_atomise(cond, atoms))
    if not skeletons or len(atoms) > max_atoms:
        return False
    for bits in itertools.product((False, True), repeat=len(atoms)):
        if not any(_eval_skeleton(t, bits) for t in skeletons):
            return False
    return True


def jointly_total(actions: list, an: Analysis, cap: int = TOTALITY_CAP) -> bool:
    """True when, in every store, at least one of ``actions`` can fire.

    Checked syntactically when possible, otherwise by enumerating the
    slots the actions read (pointer slots over their may-sets).  Gives up
    and answers False beyond ``cap`` valuations.
    """
    if any(_always_enabled(a) for a in actions):
        return True
    if _propositionally_total(actions, an.program):
        return True
    p = an.program
    lay = p.layout
    slots = set()
    for a in actions:
        slots |= _enabling_reads(a, an)
    slots = sorted(slots)
    domains = []
    size = 1
    for s in slots:
        if lay.is_pointer_slot(s):
            dom = sorted(an.alias[lay.slot_names[s]])
        else:
            lo, hi = lay.ranges[s]
            dom = list(range(lo, hi + 1))
        domains.append(dom)
        size *= len(dom)
        if size > cap:
            return False
    fns = [compile_action(a, lay) for a in actions]
    base = list(lay.initial)
    for values in itertools.product(*domains):
        for s, v in zip(slots, values):
            base[s] = v
        d = tuple(base)
        if not any((r := f(d)) is not None and r is not FAULT for f in fns):
            return False
    return True


def instrument_thread(i: int, cfg: ThreadCfg, cond_r: list, lfs: frozenset,
                      cond_l: Optional[list] = None, totals: Optional[dict] = None,
                      drop: frozenset = frozenset()) -> InstrumentedThread:
    """Apply rules R1 to R6 to one thread.

    ``cond_r``/``cond_l`` give the right- and left-moving condition per
    original edge (the shipped heuristics use one both-moving condition for
    both).  ``totals`` maps a location to whether its outgoing actions are
    jointly total; the post-phase check at a location that may block is
    strengthened to false.  ``drop`` names rules to omit (mutation testing).
    """
    cond_l = cond_r if cond_l is None else cond_l
    idx = cfg.loc_index
    sink = cfg.sink
    terminal = set(cfg.terminal_locations())
    out = cfg.out_edges
    edges = []

    def branch(src_tag, rule):
        for k, e in enumerate(cfg.edges):
            a, b = idx[e.source], idx[e.target]
            src = loc_id(a, src_tag)
            if e.target in terminal:
                edges.append(IEdge(src, TRUE, e.action, loc_id(b, TAG_L), rule, k))
                continue
            c = cond_r[k]
            edges.append(IEdge(src, c, e.action, loc_id(b, TAG_R), rule, k))
            edges.append(IEdge(src, make_not(c), e.action, loc_id(b, TAG_L), rule, k))

    if "R1" not in drop:
        branch(TAG_N, "R1")
    if "R2" not in drop:
        branch(TAG_RN, "R2")
    blocking = set()
    for l in cfg.locations:
        a = idx[l]
        if l == sink:
            continue
        if "R3" not in drop:
            edges.append(IEdge(loc_id(a, TAG_R), TRUE, Skip(), loc_id(a, TAG_RN), "R3"))
        if l in lfs:
            if "R6" not in drop:
                edges.append(IEdge(loc_id(a, TAG_L), TRUE, Skip(), loc_id(a, TAG_N), "R6"))
            continue
        c = make_and(cond_l[k] for k in out[l])
        if totals is not None and not totals.get(l, True):
            c = FALSE
            blocking.add(l)
        if "R4" not in drop:
            edges.append(IEdge(loc_id(a, TAG_L), c, Skip(), loc_id(a, TAG_LN), "R4"))
            edges.append(IEdge(loc_id(a, TAG_L), make_not(c), Skip(), loc_id(a, TAG_N), "R4"))
        if "R5" not in drop:
            for k in out[l]:
                e = cfg.edges[k]
                edges.append(IEdge(loc_id(a, TAG_LN), TRUE, e.action,
                                   loc_id(idx[e.target], TAG_L), "R5", k))
    return InstrumentedThread(i, cfg, edges, frozenset(lfs), frozenset(blocking))


MUTATIONS = ("drop_r3", "drop_r6", "force_true")


class InstrumentedProgram:
    """A lowered program together with its instrumented threads.

    Also implements the explicit-state system protocol, so ``build_ts``
    can explore the instrumented semantics directly.
    """

    def __init__(self, p: Program, conds: Optional[list] = None, mutation: Optional[str] = None,
                 analysis: Optional[Analysis] = None):
        an = analysis or analyze(p)
        p = an.program
        self.program = p
        self.analysis = an
        self.mutation = mutation
        if conds is None:
            conds = synthesize_all(an)
        self.conds = [list(row) for row in conds]
        if mutation == "force_true":
            self._force_true()
        drop = {"drop_r3": frozenset({"R3"}), "drop_r6": frozenset({"R6"})}.get(mutation, frozenset())
        if mutation is not None and mutation not in MUTATIONS:
            raise ValueError(f"unknown mutation {mutation!r}")
        self.threads = []
        for i, t in enumerate(p.threads):
            totals = {l: jointly_total([t.edges[k].action for k in t.out_edges[l]], an)
                      for l in t.locations if t.out_edges[l]}
            it = instrument_thread(i, t, [c for c, _ in self.conds[i]], an.lfs[i],
                                   totals=totals, drop=drop)
            it.exposed = compute_lfs_refined(it)
            self.threads.append(it)
        self.n_threads = len(self.threads)
        self._compile()

    def _force_true(self):
        """Replace the first non-trivial condition by True (an unsound mover claim)."""
        from .movers import HeuristicKind
        for i, row in enumerate(self.conds):
            for k, (c, kind) in enumerate(row):
                if kind != HeuristicKind.StaticMover:
                    row[k] = (TRUE, kind)
                    self.forced = (i, k)
                    return
        self.forced = None

    def _compile(self):
        p = self.program
        lay = p.layout
        self._out = []
        for it in self.threads:
            table = [[] for _ in range(it.n_locations)]
            for k, e in enumerate(it.edges):
                g = None if e.guard == TRUE else compile_condition(e.guard, p, instrumented=True)
                table[e.source].append((k, g, compile_action(e.action, lay), e.target))
            self._out.append(table)
        self._sink_base = [it.sink_base for it in self.threads]

    # system protocol
    def initial(self):
        return tuple(it.initial for it in self.threads), self.program.layout.initial

    def thread_successors(self, state, i: int):
        pc, data = state
        for k, g, fn, tgt in self._out[i][pc[i]]:
            if g is not None and not g(state):
                continue
            d2 = fn(data)
            if d2 is None or d2 is FAULT:
                continue
            yield k, (pc[:i] + (tgt,) + pc[i + 1:], d2)

    def successors(self, state):
        for i in range(self.n_threads):
            for k, s2 in self.thread_successors(state, i):
                yield i, k, s2

    def is_error(self, state) -> bool:
        pc = state[0]
        return any(pc[i] // 5 == b for i, b in enumerate(self._sink_base))

    def edge_label(self, i: int, k: int) -> str:
        it = self.threads[i]
        e = it.edges[k]
        return (f"{it.location_name(e.source)} -[c: {format_condition(e.guard)}] "
                f"{format_action(e.action)} -> {it.location_name(e.target)}")

    def format_state(self, state) -> str:
        pc, data = state
        locs = ", ".join(f"{it.cfg.name}@{it.location_name(pc[i])}"
                         for i, it in enumerate(self.threads))
        return f"[{locs} | {format_data(data, self.program)}]"

    # phases
    def phase(self, state, i: int) -> str:
        loc = state[0][i]
        if loc // 5 == self._sink_base[i]:
            return "W"
        return _PHASE_OF_TAG[loc % 5]

    def is_external(self, state, i: int) -> bool:
        """Membership in N_i: external or error."""
        return self.phase(state, i) in ("E", "W")

    def all_external(self, state) -> bool:
        return all(self.is_external(state, i) for i in range(self.n_threads))

    def is_exposed(self, state, i: int) -> bool:
        """Membership in X_i: external, or parked at an exposed pre-commit location."""
        return self.is_external(state, i) or state[0][i] in self.threads[i].exposed

    # rendering
    def format_text(self) -> str:
        lines = []
        for it in self.threads:
            lines.append(f"thread {it.cfg.name} (lfs: {{{', '.join(sorted(it.lfs))}}}, "
                         f"exposed: {{{', '.join(it.location_name(x) for x in sorted(it.exposed))}}})")
            for k in range(len(it.edges)):
                lines.append(f"  {self.edge_label(it.index, k)}  [{it.edges[k].rule}]")
        return "\n".join(lines) + "\n"

    def to_dot(self) -> str:
        out = ["digraph instrumented {", "  node [style=filled, fontsize=10];"]
        for it in self.threads:
            ti = it.index
            out.append(f"  subgraph cluster_{ti} {{")
            out.append(f"    label={_q(it.cfg.name)};")
            for tag in range(5):
                out.append("    { rank=same;")
                for b, name in enumerate(it.cfg.locations):
                    loc = loc_id(b, tag)
                    label = f"{name}^{TAG_NAMES[tag].replace('n', chr(39))}"
                    shape = "doublecircle" if b == it.sink_base else "ellipse"
                    out.append(f"      t{ti}_{loc} [label={_q(label)}, "
                               f"fillcolor={TAG_COLOURS[TAG_NAMES[tag]]}, shape={shape}];")
                out.append("    }")
            for e in it.edges:
                label = format_action(e.action) if e.guard == TRUE else \
                    f"{format_condition(e.guard)} |> {format_action(e.action)}"
                out.append(f"    t{ti}_{e.source} -> t{ti}_{e.target} [label={_q(label)}];")
            out.append("  }")
        out.append("}")
        return "\n".join(out) + "\n"


_PHASE_OF_TAG = {TAG_N: "E", TAG_R: "R", TAG_RN: "R", TAG_L: "L", TAG_LN: "L"}


def instrument(p: Program, mutation: Optional[str] = None, conds=None) -> InstrumentedProgram:
    return InstrumentedProgram(p, conds=conds, mutation=mutation)


def classify_phase(state, ip: InstrumentedProgram) -> tuple:
    """Per-thread phase: W (error), R (pre-commit), L (post-commit) or E (external)."""
    return tuple(ip.phase(state, i) for i in range(ip.n_threads))


_BISIM_CLASS = {TAG_R: 0, TAG_L: 0, TAG_N: 1, TAG_RN: 1, TAG_LN: 1}


def loc_bisim(a: int, b: int) -> bool:
    return a // 5 == b // 5 and _BISIM_CLASS[a % 5] == _BISIM_CLASS[b % 5]


def state_bisim(i: int, s, s2) -> bool:
    """The thread bisimulation: equal data and remote pcs, related local location."""
    if s[1] != s2[1]:
        return False
    pc, pc2 = s[0], s2[0]
    for j in range(len(pc)):
        if j != i and pc[j] != pc2[j]:
            return False
    return loc_bisim(pc[i], pc2[i])


def bisim_key(i: int, s) -> tuple:
    """Canonical representative key: states are related iff their keys are equal."""
    pc, data = s
    loc = pc[i]
    canon = (loc // 5) * 2 + _BISIM_CLASS[loc % 5]
    return pc[:i] + (-1 - canon,) + pc[i + 1:], data
