"""Executable checks of the transaction-system axioms on explicit state spaces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .explicit import build_ts
from .instrument import InstrumentedProgram, bisim_key, instrument
from .lang import lower_sugar
from .reduce import reduced_reach

PAS_ITEMS = {
    1: "3/4-partition",
    2: "post phases terminate",
    3: "i preserves j's phase",
    4: "local transitions preserve errors",
    5: "post does not reach pre",
    6: "bisimulation preserves (non)errors",
    7: "bisimulation entails j-phase equality",
    8: "pre right-commutes up to bisimulation",
    9: "post left-commutes up to bisimulation",
}


@dataclass
class CheckResult:
    ok: bool
    detail: str = ""
    witness: tuple = ()      # state ids

    def __bool__(self):
        return self.ok


def _successors(ts) -> list:
    out = [[] for _ in ts.states]
    for s, i, k, t in ts.transitions:
        out[s].append((i, k, t))
    return out


def check_thread_bisim(ts, i: int, key: Optional[Callable] = None) -> CheckResult:
    """Is the equivalence given by ``key`` a thread bisimulation (default: the i-relation)?

    Two related states must offer the same set of (thread, successor class)
    moves; for an equivalence this is exactly the transfer property with
    moves matched by the same thread.
    """
    if key is None:
        def key(s):
            return bisim_key(i, s)
    keys = [key(s) for s in ts.states]
    sig = [set() for _ in ts.states]
    for s, j, _, t in ts.transitions:
        sig[s].add((j, keys[t]))
    first = {}
    for sid, k in enumerate(keys):
        rep = first.setdefault(k, sid)
        if sig[rep] != sig[sid]:
            missing = sig[rep] ^ sig[sid]
            j = next(iter(missing))[0]
            return CheckResult(False, f"thread {j} move not matched", (rep, sid))
    return CheckResult(True)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _pair_closure(ts, i: int, j: int) -> list:
    """Class id per state of the transitive closure of the i- and j-relations."""
    uf = _UnionFind(ts.n_states)
    for t in (i, j):
        first = {}
        for sid, s in enumerate(ts.states):
            k = bisim_key(t, s)
            if k in first:
                uf.union(first[k], sid)
            else:
                first[k] = sid
    return [uf.find(x) for x in range(ts.n_states)]


@dataclass
class PasReport:
    items: dict = field(default_factory=dict)       # item -> CheckResult
    bisim: dict = field(default_factory=dict)       # thread -> CheckResult

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.items.values()) and all(r.ok for r in self.bisim.values())

    def failed_items(self) -> list:
        return [n for n, r in sorted(self.items.items()) if not r.ok]

    def format(self, ts=None) -> str:
        lines = []
        for n in sorted(self.items):
            r = self.items[n]
            line = f"item {n} ({PAS_ITEMS[n]}): {'PASS' if r.ok else 'FAIL'}"
            if not r.ok:
                line += f"  {r.detail}"
            lines.append(line)
            if not r.ok and ts is not None and r.witness:
                for sid in r.witness:
                    lines.append(f"    s{sid} {ts.system.format_state(ts.states[sid])}")
        bad = [i for i, r in self.bisim.items() if not r.ok]
        lines.append(f"bisimulation: {'PASS' if not bad else 'FAIL (threads ' + ', '.join(map(str, bad)) + ')'}")
        return "\n".join(lines) + "\n"


def check_pas(ts) -> PasReport:
    """Check items 1 to 9 of the transaction-system definition on a complete TS."""
    ip: InstrumentedProgram = ts.system
    n = ip.n_threads
    phases = [tuple(ip.phase(s, i) for i in range(n)) for s in ts.states]
    succ = _successors(ts)
    rep = PasReport()

    # 1: every state sits in exactly one phase per thread; W only at the sink
    res = CheckResult(True)
    for sid, s in enumerate(ts.states):
        for i in range(n):
            ph = phases[sid][i]
            if ph not in ("W", "R", "L", "E") or (ph == "W") != (s[0][i] // 5 == ip.threads[i].sink_base):
                res = CheckResult(False, f"thread {i} phase {ph!r}", (sid,))
                break
        if not res.ok:
            break
    rep.items[1] = res

    # 2: from every post state thread i alone reaches N_i
    res = CheckResult(True)
    for i in range(n):
        good = [phases[sid][i] in ("E", "W") for sid in range(ts.n_states)]
        reach = [False] * ts.n_states
        pred = [[] for _ in ts.states]
        for s, j, _, t in ts.transitions:
            if j == i:
                pred[t].append(s)
        stack = []
        for s, j, _, t in ts.transitions:
            if j == i and good[t] and not reach[s]:
                reach[s] = True
                stack.append(s)
        while stack:
            t = stack.pop()
            for s in pred[t]:
                if not reach[s]:
                    reach[s] = True
                    stack.append(s)
        bad = next((sid for sid in range(ts.n_states)
                    if phases[sid][i] == "L" and not reach[sid]), None)
        if bad is not None:
            res = CheckResult(False, f"thread {i} stuck in post phase", (bad,))
            break
    rep.items[2] = res

    # 3, 4, 5: per-transition laws
    r3 = r4 = r5 = CheckResult(True)
    for s, i, _, t in ts.transitions:
        if r3.ok and any(phases[s][j] != phases[t][j] for j in range(n) if j != i):
            r3 = CheckResult(False, f"thread {i} step changes a remote phase", (s, t))
        if r4.ok and phases[s][i] == "W" and phases[t][i] != "W":
            r4 = CheckResult(False, f"thread {i} leaves the error phase", (s, t))
        if r5.ok and phases[s][i] == "L" and phases[t][i] == "R":
            r5 = CheckResult(False, f"thread {i} goes from post to pre", (s, t))
    rep.items[3], rep.items[4], rep.items[5] = r3, r4, r5

    # 6, 7: phase laws of the bisimulation classes
    r6 = r7 = CheckResult(True)
    for i in range(n):
        first = {}
        for sid, s in enumerate(ts.states):
            rsid = first.setdefault(bisim_key(i, s), sid)
            if rsid == sid:
                continue
            if r6.ok and (phases[rsid][i] == "W") != (phases[sid][i] == "W"):
                r6 = CheckResult(False, f"relation {i} mixes error and non-error", (rsid, sid))
            if r7.ok and any(phases[rsid][j] != phases[sid][j] for j in range(n) if j != i):
                r7 = CheckResult(False, f"relation {i} mixes remote phases", (rsid, sid))
    rep.items[6], rep.items[7] = r6, r7

    # 8: s -i-> s1 (pre) -j-> s2  closes as  s -j-> . -i-> s3 with s3 ~j s2
    keys = [[bisim_key(i, s) for s in ts.states] for i in range(n)]
    res = CheckResult(True)
    for s in range(ts.n_states):
        if not res.ok:
            break
        for i, _, s1 in succ[s]:
            if phases[s1][i] != "R":
                continue
            for j, _, s2 in succ[s1]:
                if j == i:
                    continue
                closes = {keys[j][s3] for jj, _, s4 in succ[s] if jj == j
                          for ii, _, s3 in succ[s4] if ii == i}
                if keys[j][s2] not in closes:
                    res = CheckResult(False, f"threads {i},{j}: right commutation fails", (s, s1, s2))
                    break
            if not res.ok:
                break
    rep.items[8] = res

    # 9: s -j-> s1 -i-> s2 (i from post)  closes as  s -i-> . -j-> s3, s3 ~ij s2
    res = CheckResult(True)
    closures = {}
    for s in range(ts.n_states):
        if not res.ok:
            break
        for j, _, s1 in succ[s]:
            for i, _, s2 in succ[s1]:
                if i == j or phases[s1][i] != "L":
                    continue
                pair = (min(i, j), max(i, j))
                if pair not in closures:
                    closures[pair] = _pair_closure(ts, *pair)
                cls = closures[pair]
                closes = {cls[s3] for ii, _, s4 in succ[s] if ii == i
                          for jj, _, s3 in succ[s4] if jj == j}
                if cls[s2] not in closes:
                    res = CheckResult(False, f"threads {i},{j}: left commutation fails", (s, s1, s2))
                    break
            if not res.ok:
                break
    rep.items[9] = res

    for i in range(n):
        rep.bisim[i] = check_thread_bisim(ts, i)
    return rep


ENGINES = ("original", "instrumented", "brtrans", "xtrans")


@dataclass
class CrossReport:
    verdicts: dict        # engine -> "SAFE" | "VIOLATED"
    stats: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return len(set(self.verdicts.values())) == 1

    @property
    def verdict(self) -> str:
        return next(iter(self.verdicts.values())) if self.ok else "MISMATCH"

    def format(self) -> str:
        lines = [f"{e}: {v}" + (f"  ({self.stats[e]} states)" if e in self.stats else "")
                 for e, v in self.verdicts.items()]
        lines.append("engines agree" if self.ok else "MISMATCH between engines")
        return "\n".join(lines) + "\n"


def check_cross_equivalence(p, budget: Optional[int] = None, mutation: Optional[str] = None,
                            stop_at_error: bool = False) -> CrossReport:
    """Error verdicts of the original, instrumented, brtrans and xtrans engines."""
    if isinstance(p, InstrumentedProgram):
        ip = p
        prog = ip.program
    else:
        prog = lower_sugar(p)
        ip = instrument(prog, mutation=mutation)
    verdicts, stats = {}, {}
    ts = build_ts(prog, budget, stop_at_error=stop_at_error)
    verdicts["original"] = "VIOLATED" if ts.error_ids else "SAFE"
    stats["original"] = ts.n_states
    ts = build_ts(ip, budget, stop_at_error=stop_at_error)
    verdicts["instrumented"] = "VIOLATED" if ts.error_ids else "SAFE"
    stats["instrumented"] = ts.n_states
    for rel in ("brtrans", "xtrans"):
        r = reduced_reach(ip, rel, budget, stop_at_error=stop_at_error)
        verdicts[rel] = r.name
        stats[rel] = r.external_states
    return CrossReport(verdicts, stats)
