"""Command-line front end: ``dynred <command> ...``."""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .analysis import InternalError, analyze, format_analysis
from .axioms import check_cross_equivalence, check_pas
from .explicit import BudgetExceeded, build_ts, format_report, reach_error
from .instrument import instrument
from .lang import ParseError, load_program, lower_sugar, print_program
from .movers import format_movers
from .reduce import format_reduced_trace, reduced_reach

EXIT_OK, EXIT_VIOLATED, EXIT_USAGE, EXIT_BUDGET, EXIT_INTERNAL = 0, 1, 2, 3, 4

MODES = ("full", "instrumented", "reduced", "xreduced", "cross")


def _load(path: str):
    """Load a program file; a bare bundled name such as ``fig4.prog`` also works."""
    if not os.path.exists(path):
        from .corpus import BENCHMARKS, load
        stem = os.path.basename(path).removesuffix(".prog")
        if stem in BENCHMARKS and os.path.dirname(path) == "":
            return load(stem)
    return load_program(path)


def _verdict_code(safe: bool) -> int:
    return EXIT_OK if safe else EXIT_VIOLATED


def cmd_parse(args) -> int:
    sys.stdout.write(print_program(_load(args.file)))
    return EXIT_OK


def cmd_analyze(args) -> int:
    an = analyze(_load(args.file))
    sys.stdout.write(format_analysis(an))
    if args.movers:
        sys.stdout.write("movers:\n")
        sys.stdout.write(format_movers(an))
    return EXIT_OK


def cmd_instrument(args) -> int:
    ip = instrument(_load(args.file))
    sys.stdout.write(ip.to_dot() if args.dump == "dot" else ip.format_text())
    return EXIT_OK


def cmd_check(args) -> int:
    p = _load(args.file)
    budget = args.budget
    code = EXIT_OK
    if args.mode == "full":
        ts = build_ts(lower_sugar(p), budget)
        v = reach_error(ts)
        sys.stdout.write(format_report(v, ts.system))
        code = _verdict_code(v.safe)
    elif args.mode == "instrumented":
        ts = build_ts(instrument(p), budget)
        v = reach_error(ts)
        sys.stdout.write(format_report(v, ts.system))
        code = _verdict_code(v.safe)
    elif args.mode in ("reduced", "xreduced"):
        ip = instrument(p)
        r = reduced_reach(ip, "brtrans" if args.mode == "reduced" else "xtrans", budget)
        sys.stdout.write(r.report())
        if r.trace:
            sys.stdout.write("trace:\n" + format_reduced_trace(ip, r))
        code = _verdict_code(r.safe)
    else:
        rep = check_cross_equivalence(p, budget)
        sys.stdout.write(rep.format())
        if not rep.ok:
            return EXIT_INTERNAL
        code = _verdict_code(rep.verdict == "SAFE")
    if args.axioms:
        ts = build_ts(instrument(p), budget)
        pas = check_pas(ts)
        sys.stdout.write(pas.format(ts))
        if not pas.ok:
            return EXIT_INTERNAL
    return code


def cmd_encode(args) -> int:
    from .encode import emit_bmc
    if args.bound < 0:
        print("error: bound must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    script = emit_bmc(_load(args.file), args.bound)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(script.text)
    print(f"wrote {args.out} (bound {args.bound}, {len(script.declarations)} symbols)")
    return EXIT_OK


def _bench_one(job):
    from .corpus import random_program
    seed, budget = job
    rep = check_cross_equivalence(random_program(seed), budget)
    return seed, rep.ok, rep.verdicts


def cmd_bench(args) -> int:
    jobs = [(args.seed + n, args.budget) for n in range(args.count)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_one, jobs))
    else:
        results = [_bench_one(j) for j in jobs]
    mismatches = 0
    counts = {"SAFE": 0, "VIOLATED": 0}
    for seed, ok, verdicts in results:
        if ok:
            counts[next(iter(verdicts.values()))] += 1
            print(f"seed {seed}: {next(iter(verdicts.values()))}")
        else:
            mismatches += 1
            print(f"seed {seed}: MISMATCH " + ", ".join(f"{e}={v}" for e, v in verdicts.items()))
    print(f"programs: {len(results)}  safe: {counts['SAFE']}  violated: {counts['VIOLATED']}  "
          f"mismatches: {mismatches}")
    return EXIT_INTERNAL if mismatches else EXIT_OK


def cmd_stats(args) -> int:
    p = _load(args.file)
    ip = instrument(p)
    full = build_ts(lower_sugar(p), args.budget)
    inst = build_ts(ip, args.budget)
    rows = [("original states", full.n_states), ("original transitions", full.n_transitions),
            ("instrumented states", inst.n_states),
            ("instrumented transitions", inst.n_transitions)]
    for rel in ("brtrans", "xtrans"):
        r = reduced_reach(ip, rel, args.budget)
        ratio = round(r.external_states / inst.n_states, 4)
        rows += [(f"{rel} states", r.external_states), (f"{rel} blocks", r.blocks),
                 (f"{rel} max block length", r.max_block_len), (f"{rel} ratio", f"{ratio:.4f}")]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dynred",
                                 description="Dynamic Lipton reduction for small concurrent programs.")
    ap.add_argument("--budget", type=int, default=None,
                    help="state cap (default: $DYNRED_BUDGET or 1000000)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="validate and pretty-print a program")
    p.add_argument("file")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("analyze", help="alias sets, conflicts and feedback sets")
    p.add_argument("file")
    p.add_argument("--movers", action="store_true", help="also print moving conditions")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("instrument", help="print the instrumented CFG")
    p.add_argument("file")
    p.add_argument("--dump", choices=("dot", "text"), default="text")
    p.set_defaults(func=cmd_instrument)

    p = sub.add_parser("check", help="decide reachability of an error location")
    p.add_argument("file")
    p.add_argument("--mode", choices=MODES, default="full")
    p.add_argument("--axioms", action="store_true",
                   help="also check the transaction-system axioms on the instrumented system")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("encode", help="write a BMC script in SMT-LIB2")
    p.add_argument("file")
    p.add_argument("--bound", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("bench", help="randomized cross-equivalence campaign")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="reduction metrics for one program")
    p.add_argument("file")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        return args.func(args)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except InternalError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
