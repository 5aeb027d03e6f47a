"""Large-block encoding of the exposed-location block relation as an SMT-LIB2 BMC script.

Terms are plain tuples: ``("var", name)``, Python ints and bools for
literals, and ``(op, arg, ...)`` for applications.  The same terms are
printed to SMT-LIB text and evaluated by a small finite-domain enumerator,
which decides the emitted formula without an external solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional

from .analysis import InternalError
from .instrument import (TAG_N, InstrumentedProgram, InstrumentedThread, base_of, instrument,
                         tag_of)
from .lang import (AddrOf, ArrayRef, Assign, BoolConst, Cas, Const, Deref, Guard, Not,
                   Null, Program, Skip, VarRef)
from .movers import And, DerefNeq, FalseC, NotC, PcNotAt, PtrNeq, TrueC, VarCmp

# ---------------------------------------------------------------------------
# Terms


def V(name: str) -> tuple:
    return ("var", name)


def is_var(t) -> bool:
    return isinstance(t, tuple) and t[0] == "var"


def mk_and(*parts):
    flat = []
    for p in parts:
        if p is True:
            continue
        if p is False:
            return False
        if isinstance(p, tuple) and p[0] == "and":
            flat.extend(p[1:])
        else:
            flat.append(p)
    if not flat:
        return True
    return flat[0] if len(flat) == 1 else ("and", *flat)


def mk_or(*parts):
    flat = []
    for p in parts:
        if p is False:
            continue
        if p is True:
            return True
        if isinstance(p, tuple) and p[0] == "or":
            flat.extend(p[1:])
        else:
            flat.append(p)
    if not flat:
        return False
    return flat[0] if len(flat) == 1 else ("or", *flat)


def mk_not(t):
    if isinstance(t, bool):
        return not t
    if isinstance(t, tuple) and t[0] == "not":
        return t[1]
    return ("not", t)


def mk_eq(a, b):
    if not isinstance(a, tuple) and not isinstance(b, tuple):
        return a == b
    if a == b:
        return True
    return ("=", a, b)


def mk_ite(c, a, b):
    if c is True:
        return a
    if c is False:
        return b
    if a == b:
        return a
    return ("ite", c, a, b)


def mk_app(op: str, a, b):
    if isinstance(a, int) and isinstance(b, int) and not isinstance(a, bool) and not isinstance(b, bool):
        return _APPLY[op](a, b)
    return (op, a, b)


_APPLY = {
    "+": lambda a, b: a + b, "-": lambda a, b: a - b,
    "<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
    "distinct": lambda a, b: a != b, "=": lambda a, b: a == b,
    "mod": lambda a, b: a % b,
}


def term_vars(t, out: Optional[set] = None) -> set:
    out = set() if out is None else out
    if isinstance(t, tuple):
        if t[0] == "var":
            out.add(t[1])
        else:
            for a in t[1:]:
                term_vars(a, out)
    return out


def format_term(t) -> str:
    if t is True:
        return "true"
    if t is False:
        return "false"
    if isinstance(t, int):
        return str(t) if t >= 0 else f"(- {-t})"
    if t[0] == "var":
        return t[1]
    return "(" + " ".join([t[0]] + [format_term(a) for a in t[1:]]) + ")"


def eval_term(t, env: dict):
    if isinstance(t, (bool, int)):
        return t
    op = t[0]
    if op == "var":
        return env[t[1]]
    if op == "and":
        return all(eval_term(a, env) for a in t[1:])
    if op == "or":
        return any(eval_term(a, env) for a in t[1:])
    if op == "not":
        return not eval_term(t[1], env)
    if op == "ite":
        return eval_term(t[2], env) if eval_term(t[1], env) else eval_term(t[3], env)
    return _APPLY[op](eval_term(t[1], env), eval_term(t[2], env))


def solve(constraints: list, order: list, ranges: dict, fixed: dict) -> Iterator[dict]:
    """Enumerate every assignment to ``order`` within ``ranges`` satisfying all constraints.

    Variables are assigned in the given order.  A top-level equality that
    defines a variable from earlier ones narrows its candidates to one
    value; otherwise the whole range is tried.
    """
    pos = {v: k for k, v in enumerate(order)}
    known = set(fixed)

    def last(vs):
        return max((pos[v] for v in vs if v not in known), default=-1)

    checks = [[] for _ in range(len(order) + 1)]
    defs = [[] for _ in order]
    for c in constraints:
        vs = term_vars(c)
        missing = [v for v in vs if v not in known and v not in pos]
        if missing:
            raise ValueError(f"unbound symbols {sorted(missing)}")
        checks[last(vs) + 1].append(c)
        if isinstance(c, tuple) and c[0] == "=":
            for lhs, rhs in ((c[1], c[2]), (c[2], c[1])):
                if is_var(lhs) and lhs[1] in pos:
                    if last(term_vars(rhs)) < pos[lhs[1]]:
                        defs[pos[lhs[1]]].append(rhs)
    env = dict(fixed)
    if not all(eval_term(c, env) for c in checks[0]):
        return

    def rec(k):
        if k == len(order):
            yield dict(env)
            return
        v = order[k]
        lo, hi = ranges[v]
        if defs[k]:
            x = eval_term(defs[k][0], env)
            cands = [x] if lo <= x <= hi else []
        else:
            cands = range(lo, hi + 1)
        for x in cands:
            env[v] = x
            if all(eval_term(c, env) for c in checks[k + 1]):
                yield from rec(k + 1)
        env.pop(v, None)

    yield from rec(0)


# ---------------------------------------------------------------------------
# Blocks


@dataclass(frozen=True)
class Block:
    thread: int
    entry: int
    exit: int
    edges: tuple      # instrumented edge indices along the path

    def steps(self, it: InstrumentedThread) -> list:
        return [(it.edges[k].guard, it.edges[k].action) for k in self.edges]


def x_locations(it: InstrumentedThread) -> frozenset:
    """External, sink and exposed pre-commit locations of one instrumented thread."""
    out = set(it.exposed)
    for loc in range(it.n_locations):
        if tag_of(loc) == TAG_N or base_of(loc) == it.sink_base:
            out.add(loc)
    return frozenset(out)


def enumerate_blocks(it: InstrumentedThread, exposed: Optional[frozenset] = None) -> list:
    """All instrumented paths between X-locations with no X-location in between."""
    if exposed is not None and exposed != it.exposed:
        it = InstrumentedThread(it.index, it.cfg, it.edges, it.lfs, it.blocking, frozenset(exposed))
    xs = x_locations(it)
    out_edges = it.out_edges()
    blocks = []
    for entry in sorted(xs):
        if base_of(entry) == it.sink_base:
            continue
        stack = [(entry, (), frozenset())]
        found = []
        while stack:
            loc, path, on_path = stack.pop()
            for k in reversed(out_edges[loc]):
                tgt = it.edges[k].target
                if tgt in xs:
                    found.append(Block(it.index, entry, tgt, path + (k,)))
                    continue
                if tgt in on_path:
                    raise InternalError(f"cycle without exposed location at {it.location_name(tgt)}")
                stack.append((tgt, path + (k,), on_path | {tgt}))
        blocks.extend(sorted(found, key=lambda b: b.edges))
    return blocks


# ---------------------------------------------------------------------------
# Translation of expressions, conditions and actions


class _Frame:
    """Symbolic store while walking one block: slot -> current term."""

    def __init__(self, ip: InstrumentedProgram, thread: int, t: int, prefix: str):
        self.ip = ip
        p = ip.program
        self.lay = p.layout
        self.thread = thread
        self.cur = [V(f"v_{n}_{t}") for n in self.lay.slot_names]
        self.pcs = [V(f"pc_{th.name}_{t}") for th in p.threads]
        self.prefix = prefix
        self.fresh = []          # (symbol, slot)
        self.cons = []

    def new_symbol(self, slot: int, value) -> tuple:
        name = f"{self.prefix}_{len(self.fresh)}"
        self.fresh.append((name, slot))
        self.cons.append(("=", V(name), value))
        return V(name)

    # expressions: (value term, definedness term)
    def expr(self, e):
        lay = self.lay
        if isinstance(e, Const):
            return e.value, True
        if isinstance(e, BoolConst):
            return e.value, True
        if isinstance(e, Null):
            return 0, True
        if isinstance(e, AddrOf):
            return lay.address_of(e), True
        if isinstance(e, VarRef):
            return self.cur[lay.slot_of[e.name]], True
        if isinstance(e, ArrayRef):
            base, n = lay.array_base[e.name]
            if isinstance(e.index, Const):
                return self.cur[base + e.index.value], True
            vi, di = self.expr(e.index)
            val = self.cur[base + n - 1]
            for j in range(n - 2, -1, -1):
                val = mk_ite(mk_eq(vi, j), self.cur[base + j], val)
            return val, mk_and(di, mk_app("<=", 0, vi), mk_app("<", vi, n))
        if isinstance(e, Deref):
            pv = self.cur[lay.slot_of[e.pointer]]
            n = lay.n_addressable
            val = self.cur[n - 1]
            for k in range(n - 2, -1, -1):
                val = mk_ite(mk_eq(pv, k + 1), self.cur[k], val)
            return val, mk_app("distinct", pv, 0)
        if isinstance(e, Not):
            v, d = self.expr(e.operand)
            return mk_not(v), d
        vl, dl = self.expr(e.left)
        vr, dr = self.expr(e.right)
        if e.op == "&&":
            return mk_and(vl, vr), mk_and(dl, mk_or(mk_not(vl), dr))
        if e.op == "||":
            return mk_or(vl, vr), mk_and(dl, mk_or(vl, dr))
        op = {"==": "=", "!=": "distinct"}.get(e.op, e.op)
        if op == "=":
            return mk_eq(vl, vr), mk_and(dl, dr)
        return mk_app(op, vl, vr), mk_and(dl, dr)

    def lvalue(self, lv):
        """Candidate slots with selection terms, and the definedness term."""
        lay = self.lay
        if isinstance(lv, VarRef):
            return [(lay.slot_of[lv.name], True)], True
        if isinstance(lv, ArrayRef):
            base, n = lay.array_base[lv.name]
            if isinstance(lv.index, Const):
                return [(base + lv.index.value, True)], True
            vi, di = self.expr(lv.index)
            return ([(base + j, mk_eq(vi, j)) for j in range(n)],
                    mk_and(di, mk_app("<=", 0, vi), mk_app("<", vi, n)))
        pv = self.cur[lay.slot_of[lv.pointer]]
        return ([(k, mk_eq(pv, k + 1)) for k in range(lay.n_addressable)],
                mk_app("distinct", pv, 0))

    def wrap(self, slot: int, v):
        lo, hi = self.lay.ranges[slot]
        if isinstance(v, int) and not isinstance(v, bool):
            return self.lay.wrap(slot, v)
        size = hi - lo + 1
        if lo == 0:
            return ("mod", v, size)
        return ("+", lo, ("mod", ("-", v, lo), size))

    def condition(self, c, own_pc: int):
        p = self.ip.program
        if isinstance(c, TrueC):
            return True
        if isinstance(c, FalseC):
            return False
        if isinstance(c, PcNotAt):
            j = p.thread_index[c.thread]
            idx = p.threads[j].loc_index
            bases = sorted(idx[l] for l in c.locations)
            if j == self.thread:
                return base_of(own_pc) not in bases
            pc = self.pcs[j]
            return mk_and(*(mk_not(mk_and(mk_app("<=", 5 * b, pc), mk_app("<=", pc, 5 * b + 4)))
                            for b in bases))
        if isinstance(c, PtrNeq):
            lay = self.lay
            return mk_app("distinct", self.cur[lay.slot_of[c.left]], self.cur[lay.slot_of[c.right]])
        if isinstance(c, DerefNeq):
            v, d = self.expr(c.target)
            w, _ = self.expr(c.value)
            return mk_and(d, mk_app("distinct", v, w))
        if isinstance(c, VarCmp):
            op = {"==": "=", "!=": "distinct"}.get(c.op, c.op)
            return mk_app(op, self.cur[self.lay.slot_of[c.var]], c.value)
        if isinstance(c, And):
            return mk_and(*(self.condition(x, own_pc) for x in c.parts))
        if isinstance(c, NotC):
            return mk_not(self.condition(c.operand, own_pc))
        raise TypeError(c)

    def action(self, a):
        """Append the enabling constraint and SSA updates of one action."""
        if isinstance(a, Skip):
            return
        if isinstance(a, Guard):
            v, d = self.expr(a.cond)
            self.cons.append(mk_and(d, v))
            return
        when = True
        if a.when is not None:
            wv, wd = self.expr(a.when)
            when = mk_and(wd, wv)
        cands, dl = self.lvalue(a.target)
        if isinstance(a, Assign):
            val, dv = self.expr(a.value)
            self.cons.append(mk_and(when, dl, dv))
            updates = [(k, mk_ite(sel, self.wrap(k, val), self.cur[k])) for k, sel in cands]
            for k, term in updates:
                self.cur[k] = term if not isinstance(term, tuple) or is_var(term) \
                    else self.new_symbol(k, term)
            return
        if isinstance(a, Cas):
            ev, de = self.expr(a.expected)
            nv, dn = self.expr(a.new)
            self.cons.append(mk_and(when, dl, de, dn))
            old = self.cur[cands[-1][0]]
            for k, sel in reversed(cands[:-1]):
                old = mk_ite(sel, self.cur[k], old)
            ok = self.new_symbol_bool(mk_eq(old, ev))
            updates = [(k, mk_ite(mk_and(sel, ok), self.wrap(k, nv), self.cur[k])) for k, sel in cands]
            for k, term in updates:
                self.cur[k] = term if not isinstance(term, tuple) or is_var(term) \
                    else self.new_symbol(k, term)
            if a.result is not None:
                r = self.lay.slot_of[a.result]
                self.cur[r] = self.new_symbol(r, mk_ite(ok, self.lay.wrap(r, 1), self.lay.wrap(r, 0)))
            return
        raise TypeError(f"cannot encode sugar action {a!r}")

    def new_symbol_bool(self, term):
        """Name a success flag as a 0/1 integer so later terms share it."""
        if isinstance(term, bool):
            return term
        name = f"{self.prefix}_{len(self.fresh)}"
        self.fresh.append((name, None))
        self.cons.append(("=", V(name), ("ite", term, 1, 0)))
        return ("=", V(name), 1)


@dataclass
class BlockEncoding:
    block: Block
    constraints: list
    fresh: list            # (symbol, range)


def encode_block(ip: InstrumentedProgram, b: Block, t: int, tag: str) -> BlockEncoding:
    """Constraints relating step-t symbols to step-(t+1) symbols along block ``b``."""
    p = ip.program
    it = ip.threads[b.thread]
    fr = _Frame(ip, b.thread, t, f"s_{t}_{p.threads[b.thread].name}_{tag}")
    fr.cons.append(mk_eq(fr.pcs[b.thread], b.entry))
    for k in b.edges:
        e = it.edges[k]
        g = fr.condition(e.guard, e.source)
        if g is not True:
            fr.cons.append(g)
        fr.action(e.action)
    cons = list(fr.cons)
    for j, th in enumerate(p.threads):
        nxt = V(f"pc_{th.name}_{t + 1}")
        cons.append(mk_eq(nxt, b.exit if j == b.thread else fr.pcs[j]))
    for k, name in enumerate(p.layout.slot_names):
        cons.append(mk_eq(V(f"v_{name}_{t + 1}"), fr.cur[k]))
    ranges = [(name, (0, 1) if slot is None else p.layout.ranges[slot]) for name, slot in fr.fresh]
    return BlockEncoding(b, [c for c in cons if c is not True], ranges)


# ---------------------------------------------------------------------------
# Denotation and the BMC script


def _state_env(ip: InstrumentedProgram, s, t: int) -> dict:
    p = ip.program
    env = {f"pc_{th.name}_{t}": s[0][j] for j, th in enumerate(p.threads)}
    env.update({f"v_{n}_{t}": s[1][k] for k, n in enumerate(p.layout.slot_names)})
    return env


def _env_state(ip: InstrumentedProgram, env: dict, t: int):
    p = ip.program
    return (tuple(env[f"pc_{th.name}_{t}"] for th in p.threads),
            tuple(env[f"v_{n}_{t}"] for n in p.layout.slot_names))


def _step_ranges(ip: InstrumentedProgram, t: int) -> list:
    p = ip.program
    out = [(f"pc_{th.name}_{t}", (0, ip.threads[j].n_locations - 1))
           for j, th in enumerate(p.threads)]
    out += [(f"v_{n}_{t}", p.layout.ranges[k]) for k, n in enumerate(p.layout.slot_names)]
    return out


def run_block(ip: InstrumentedProgram, b: Block, s) -> Optional[tuple]:
    """Execute a block operationally from state ``s``; None if it does not complete."""
    it = ip.threads[b.thread]
    table = ip._out[b.thread]
    for k in b.edges:
        pc = s[0]
        if pc[b.thread] != it.edges[k].source:
            return None
        entry = next(x for x in table[it.edges[k].source] if x[0] == k)
        _, g, fn, tgt = entry
        if g is not None and not g(s):
            return None
        d2 = fn(s[1])
        if d2 is None or not isinstance(d2, tuple):
            return None
        s = (pc[:b.thread] + (tgt,) + pc[b.thread + 1:], d2)
    return s


class DenotationMismatch(Exception):
    def __init__(self, block: Block, pairs: set):
        super().__init__(f"block {block} disagrees on {len(pairs)} pair(s), e.g. {next(iter(pairs))}")
        self.block = block
        self.pairs = pairs


def symbolic_successors(ip: InstrumentedProgram, enc: BlockEncoding, s) -> set:
    order = [n for n, _ in enc.fresh] + [n for n, _ in _step_ranges(ip, 1)]
    ranges = dict(enc.fresh)
    ranges.update(_step_ranges(ip, 1))
    return {_env_state(ip, env, 1) for env in solve(enc.constraints, order, ranges, _state_env(ip, s, 0))}


def block_denotation(b: Block, p, states=None) -> set:
    """(pre, post) pairs of a block, computed operationally and from its constraints.

    ``states`` is the set of pre-states to consider; by default every state
    reached by the exposed-location search.  Raises DenotationMismatch if
    the two computations differ.
    """
    ip = p if isinstance(p, InstrumentedProgram) else instrument(p)
    if states is None:
        from .reduce import reduced_reach
        states = reduced_reach(ip, "xtrans").states
    enc = encode_block(ip, b, 0, "d")
    op, sym = set(), set()
    for s in states:
        if s[0][b.thread] != b.entry:
            continue
        t = run_block(ip, b, s)
        if t is not None:
            op.add((s, t))
        sym.update((s, t2) for t2 in symbolic_successors(ip, enc, s))
    if op != sym:
        raise DenotationMismatch(b, op ^ sym)
    return op


def all_states(ip: InstrumentedProgram, cap: int = 200_000) -> list:
    """Every pc/data combination within declared ranges (small programs only)."""
    dims = [range(it.n_locations) for it in ip.threads]
    dims += [range(lo, hi + 1) for lo, hi in ip.program.layout.ranges]
    total = 1
    for d in dims:
        total *= len(d)
    if total > cap:
        raise ValueError(f"{total} states exceed the enumeration cap {cap}")
    n = ip.n_threads
    return [(c[:n], c[n:]) for c in itertools.product(*dims)]


def _scheduler(ip: InstrumentedProgram, i: int, t: int):
    """Only the parked thread may move: no other thread sits at an exposed location."""
    p = ip.program
    parts = []
    for j, it in enumerate(ip.threads):
        if j != i:
            parts += [mk_not(mk_eq(V(f"pc_{p.threads[j].name}_{t}"), x)) for x in sorted(it.exposed)]
    return mk_and(*parts)


@dataclass
class BmcScript:
    program: Program
    bound: int
    comments: list
    declarations: list                 # (symbol, (lo, hi))
    init: list                         # conjuncts
    trans: list                        # per step: list of disjuncts, each a list of conjuncts
    trans_fresh: list                  # per step, per disjunct: [(symbol, range)]
    bad: list                          # per step: term
    header: str = "(set-logic QF_LIA)"

    @property
    def text(self) -> str:
        lines = list(self.comments)
        lines.append(self.header)
        for name, _ in self.declarations:
            lines.append(f"(declare-fun {name} () Int)")
        lines.append(f"(assert {format_term(mk_and(*self.init))})")
        for t, disjuncts in enumerate(self.trans):
            body = mk_or(*(mk_and(*d) for d in disjuncts))
            lines.append(f"; Trans_{t}")
            lines.append(f"(assert {format_term(body)})")
        for name, (lo, hi) in self.declarations:
            lines.append(f"(assert (and (<= {format_term(lo)} {name}) (<= {name} {format_term(hi)})))")
        lines.append(f"(assert {format_term(mk_or(*self.bad))})")
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n"


def emit_bmc(p, k: int) -> BmcScript:
    """Unroll the block relation ``k`` times from the initial state."""
    if k < 0:
        raise ValueError("bound must be non-negative")
    ip = p if isinstance(p, InstrumentedProgram) else instrument(p)
    prog = ip.program
    comments = ["; location-id table"]
    for it in ip.threads:
        for loc in range(it.n_locations):
            comments.append(f";   {it.cfg.name} {loc} = {it.location_name(loc)}")
    blocks = [enumerate_blocks(it) for it in ip.threads]
    decls = []
    for t in range(k + 1):
        decls += _step_ranges(ip, t)
    s0 = ip.initial()
    init = [mk_eq(V(n), v) for n, v in _state_env(ip, s0, 0).items()]
    trans, trans_fresh = [], []
    for t in range(k):
        disjuncts, fresh = [], []
        for i, bl in enumerate(blocks):
            sched = _scheduler(ip, i, t)
            for bi, b in enumerate(bl):
                enc = encode_block(ip, b, t, str(bi))
                disjuncts.append(([sched] if sched is not True else []) + enc.constraints)
                fresh.append(enc.fresh)
                decls += enc.fresh
        stutter = [mk_eq(V(f"{n[:n.rindex('_')]}_{t + 1}"), V(n)) for n, _ in _step_ranges(ip, t)]
        disjuncts.append(stutter)
        fresh.append([])
        trans.append(disjuncts)
        trans_fresh.append(fresh)
    bad = []
    for t in range(k + 1):
        parts = []
        for j, it in enumerate(ip.threads):
            pc = V(f"pc_{prog.threads[j].name}_{t}")
            parts += [mk_eq(pc, x) for x in it.sink_ids()]
        bad.append(mk_or(*parts))
    return BmcScript(prog, k, comments, decls, init, trans, trans_fresh, bad)


def ground_decide(script: BmcScript, ip: Optional[InstrumentedProgram] = None) -> bool:
    """Decide satisfiability of a BMC script by enumerating its ground models layer by layer.

    Each Trans step only links step-t and step-(t+1) symbols, so the
    reachable step-t valuations can be computed forward.  The stutter
    disjunct makes the layers monotone, which allows a global seen set.
    """
    ip = ip or instrument(script.program)
    ranges0 = dict(_step_ranges(ip, 0))
    order0 = list(ranges0)
    layer = []
    for env in solve(script.init, order0, ranges0, {}):
        layer.append(_env_state(ip, env, 0))
    seen = set(layer)
    frontier = layer
    for t in range(script.bound + 1):
        if any(eval_term(script.bad[t], _state_env(ip, s, t)) for s in frontier):
            return True
        if t == script.bound:
            break
        nxt_ranges = dict(_step_ranges(ip, t + 1))
        new = []
        for s in frontier:
            env0 = _state_env(ip, s, t)
            for cons, fresh in zip(script.trans[t], script.trans_fresh[t]):
                order = [n for n, _ in fresh] + list(nxt_ranges)
                rng = dict(fresh)
                rng.update(nxt_ranges)
                for env in solve(cons, order, rng, env0):
                    s2 = _env_state(ip, env, t + 1)
                    if s2 not in seen:
                        seen.add(s2)
                        new.append(s2)
        # states seen earlier stay available through the stutter disjunct and
        # were already checked, so only the new ones need expanding
        frontier = new
    return False


def x_relation(ip: InstrumentedProgram, states) -> set:
    """One-step pairs of the exposed-location block relation from ``states``."""
    from .reduce import movable_threads, x_block_successors
    out = set()
    for s in states:
        for i in movable_threads(ip, s):
            out.update((s, st.target) for st in x_block_successors(ip, s, i))
    return out


def block_relation(ip: InstrumentedProgram, states) -> set:
    """Union of block denotations, restricted by the scheduler constraint."""
    out = set()
    states = list(states)
    for it in ip.threads:
        for b in enumerate_blocks(it):
            for s, t in block_denotation(b, ip, states):
                if all(s[0][j] not in other.exposed for j, other in enumerate(ip.threads)
                       if j != it.index):
                    out.add((s, t))
    return out
