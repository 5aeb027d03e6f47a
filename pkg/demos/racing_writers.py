"""Two writers whose statements only commute in the initial state.

A static reduction that made each thread one atomic block would miss the
final values (1,2) and (2,2).  The dynamic conditions keep the reduction
sound: the bad outcome is still found, and the trace shows which blocks
lead there.
"""

from dynred import analyze, check_cross_equivalence, instrument, reduced_reach
from dynred.corpus import load
from dynred.movers import format_movers
from dynred.reduce import format_reduced_trace

p = load("fig4")
print("moving conditions:")
print(format_movers(analyze(p)))

print(check_cross_equivalence(p).format())

ip = instrument(p)
r = reduced_reach(ip, "brtrans")
print(r.report())
print("violating run, one block per group:")
print(format_reduced_trace(ip, r))
