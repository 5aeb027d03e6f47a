"""Two threads that never touch the same variable.

Every interleaving commutes, so the reduced search only needs the corners
where both threads are between transactions.
"""

from dynred import build_ts, instrument, reduced_reach
from dynred.corpus import corpus_text, load

print(corpus_text("fig3"))
p = load("fig3")
full = build_ts(p)
print(f"full interleaving: {full.n_states} states, {full.n_transitions} transitions")

ip = instrument(p)
r = reduced_reach(ip, "brtrans")
print(f"reduced search: {r.external_states} external states")
for s in r.states:
    print("  ", ip.format_state(s))
