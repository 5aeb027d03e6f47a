"""Lock-free hash table with three workloads.

Lookups of keys already in the table reduce well: the probing CAS becomes
a mover as soon as its bucket is non-empty.  The table prints state counts
for the full instrumented system against both reduced searches.
"""

from dynred import build_ts, instrument, reduced_reach
from dynred.corpus import load

print(f"{'workload':<14}{'instrumented':>14}{'brtrans':>10}{'xtrans':>10}{'ratio':>9}")
for name in ("fig5_inserts", "fig5_lookups", "fig5_mixed"):
    ip = instrument(load(name))
    full = build_ts(ip).n_states
    br = reduced_reach(ip, "brtrans")
    xr = reduced_reach(ip, "xtrans")
    print(f"{name:<14}{full:>14}{br.external_states:>10}{xr.external_states:>10}"
          f"{br.external_states / full:>9.4f}  {br.name}")
