"""
Normalizing a stochastic transducer
===================================

A weighted automaton with arbitrary positive weights is turned into a locally
normalized one: at every state the final weight plus the outgoing arc weights
sum to one. Relative behavior is unchanged.
"""

from sfst import Arc, Wfst, behavior_eval, grand_total, weight_push

f = Wfst()
f.add_states(3)
f.set_start(0)
f.add_arc(0, Arc(1, 1, 2.0, 1))
f.add_arc(0, Arc(2, 2, 1.0, 1))
f.add_arc(1, Arc(3, 3, 0.5, 2))
f.set_final(1, 0.5)
f.set_final(2, 1.0)

total = grand_total(f)
print("grand total before pushing:", total)

g = weight_push(f)
print("grand total after pushing: ", grand_total(g))

for q in g.states():
    outflow = g.final(q) + sum(a.weight for a in g.arcs(q))
    print(f"state {q}: outflow {outflow:.12f}")

# every string keeps its share of the total mass
for u in [(1,), (2,), (1, 3)]:
    print(u, behavior_eval(f, u, u) / total, behavior_eval(g, u, u))
