"""
Drawing string pairs
====================

Sampling from a locally normalized transducer is a random walk: at each state
pick termination or one of the arcs in proportion to its weight. Empirical
frequencies converge to the exact behavior.
"""

from collections import Counter

from sfst import Arc, Rng, Wfst, behavior_eval, rand_string_pairs

f = Wfst()
f.add_states(4)
f.set_start(0)
f.add_arc(0, Arc(1, 1, 0.8, 1))
f.add_arc(0, Arc(2, 2, 0.2, 2))
f.add_arc(1, Arc(2, 2, 0.375, 3))
f.set_final(1, 0.625)
f.set_final(2, 1.0)
f.set_final(3, 1.0)

n = 50000
counts = Counter(p.input for p in rand_string_pairs(f, Rng(7), n))
for s in sorted(counts):
    print(s, "empirical", counts[s] / n, "exact", behavior_eval(f, s, s))
