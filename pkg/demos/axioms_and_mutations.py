"""The transaction-system checks on a healthy and on broken instrumentations.

Each mutation removes or weakens one piece of the construction; the item
that catches it says which guarantee was lost.
"""

from dynred import build_ts, check_cross_equivalence, check_pas, instrument
from dynred.corpus import load
from dynred.instrument import MUTATIONS

p = load("fig4")
ts = build_ts(instrument(p))
print("unmodified instrumentation:")
print(check_pas(ts).format())

for mut in MUTATIONS:
    ip = instrument(p, mutation=mut)
    rep = check_pas(build_ts(ip))
    cross = check_cross_equivalence(ip)
    print(f"{mut}: failed items {rep.failed_items()}, "
          f"bisimulation {'ok' if all(r.ok for r in rep.bisim.values()) else 'broken'}, "
          f"engines {'agree' if cross.ok else 'disagree ' + str(cross.verdicts)}")
