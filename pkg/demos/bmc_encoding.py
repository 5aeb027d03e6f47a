"""Bounded model checking over whole transactions.

Each BMC step is one block of one thread, so the racing writers need only
a handful of steps.  The script is written in SMT-LIB2 and decided here by
the built-in ground enumerator; any QF_LIA solver can read the same file.
"""

import sys

from dynred import emit_bmc, ground_decide, instrument
from dynred.corpus import load
from dynred.reduce import bounded_reach

ip = instrument(load("fig4"))
for k in range(7):
    script = emit_bmc(ip, k)
    sat = ground_decide(script, ip)
    assert sat == bounded_reach(ip, k)
    print(f"bound {k}: {'sat' if sat else 'unsat'} "
          f"({len(script.declarations)} symbols, {len(script.text.splitlines())} lines)")

out = sys.argv[1] if len(sys.argv) > 1 else "racing_writers_k5.smt2"
with open(out, "w", encoding="utf-8") as fh:
    fh.write(emit_bmc(ip, 5).text)
print(f"wrote {out}")
