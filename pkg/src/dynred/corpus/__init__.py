"""Bundled benchmark programs and a seeded random program generator."""

from __future__ import annotations

import random
from importlib import resources

from ..lang import Program, parse_program

# file stems; the hash table contributes three workloads
BENCHMARKS = ("fig1", "fig2", "fig3", "fig4", "fig5_inserts", "fig5_lookups", "fig5_mixed",
              "fig6", "dynlock")


def corpus_text(name: str) -> str:
    return resources.files(__package__).joinpath(f"{name}.prog").read_text(encoding="utf-8")


def load(name: str) -> Program:
    return parse_program(corpus_text(name))


def load_all() -> dict:
    return {name: load(name) for name in BENCHMARKS}


def random_program_text(seed: int, max_threads: int = 3, max_locations: int = 4,
                        max_domain: int = 4) -> str:
    """A small random program in the concrete syntax, deterministic in ``seed``."""
    rng = random.Random(seed)
    lines = [f"// random program, seed {seed}"]
    nvars = rng.randint(2, 3)
    names = ["x", "y", "z"][:nvars]
    hi = {}
    for v in names:
        d = rng.randint(2, max_domain)
        hi[v] = d - 1
        lines.append(f"var {v}: int[0..{d - 1}] = {rng.randint(0, d - 1)};")
    use_ptr = rng.random() < 0.4
    if use_ptr:
        lines.append(f"ptr p = &{rng.choice(names)};")
    use_array = rng.random() < 0.3
    if use_array:
        d = rng.randint(2, max_domain)
        hi["A"] = d - 1
        lines.append(f"array A[2]: int[0..{d - 1}] = {{0, {rng.randint(0, d - 1)}}};")

    def const(v):
        return str(rng.randint(0, hi[v]))

    def cond():
        v = rng.choice(names)
        op = rng.choice(["==", "!=", "<", ">="])
        return f"{v} {op} {const(v)}"

    def stmt():
        v = rng.choice(names)
        w = rng.choice(names)
        kind = rng.randrange(9)
        if kind == 0:
            return f"{v} := {const(v)}"
        if kind == 1:
            return f"{v} := {w}"
        if kind == 2:
            return f"{v} := {w} + {rng.randint(1, 2)}"
        if kind == 3:
            return f"when ({cond()}) {v} := {const(v)}"
        if kind == 4:
            return f"cas({v}, {const(v)}, {const(v)})"
        if kind == 5:
            return f"when ({cond()}) skip"
        if kind == 6 and use_ptr:
            return rng.choice([f"*p := {const(v)}", f"p := &{w}", f"{v} := *p", "*p++"])
        if kind == 7 and use_array:
            return rng.choice([f"A[{rng.randint(0, 1)}] := {const(v)}",
                               f"{v} := A[{rng.randint(0, 1)}]", f"A[{v}] := 1"])
        if kind == 8 and rng.random() < 0.3:
            return f"assert({cond()})"
        return f"{v}++"

    nthreads = rng.randint(1, max_threads)
    for t in range(nthreads):
        nloc = rng.randint(1, max_locations)
        labels = [f"l{k}" for k in range(nloc)]
        lines.append(f"thread T{t + 1} {{")
        for k, lab in enumerate(labels):
            for _ in range(rng.choice([1, 1, 1, 2])):
                s = stmt()
                r = rng.random()
                if r < 0.6:
                    tgt = labels[k + 1] if k + 1 < nloc else "end"
                elif r < 0.8:
                    tgt = "end"
                else:
                    tgt = rng.choice(labels)
                lines.append(f"  {lab}: {s} goto {tgt};")
        lines.append("}")
    if rng.random() < 0.7:
        lines.append(f"assert({cond()});")
    return "\n".join(lines) + "\n"


def random_program(seed: int, **kw) -> Program:
    return parse_program(random_program_text(seed, **kw))
