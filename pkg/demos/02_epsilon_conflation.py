"""
Epsilon-cycle conflation
========================

A sampler walking an epsilon self-loop of weight 0.9 repeats it nine times on
average before moving on. Conflating epsilon cycles replaces each epsilon
component with a bipartite gadget, so every path takes at most one epsilon
step per component.
"""

import numpy as np

from sfst import EPSILON, Arc, Rng, Sampler, Wfst, conflate_epsilon_cycles, normalize, rand_paths

f = Wfst()
f.add_states(2)
f.set_start(0)
f.add_arc(0, Arc(EPSILON, EPSILON, 0.9, 0))
f.add_arc(0, Arc(1, 1, 0.1, 1))
f.set_final(1, 1.0)

# diagnostic mode lets the sampler walk the cycle
choices = Sampler(f, allow_epsilon_cycles=True).draw_choices(Rng(0), 100000)
print("mean self-loop repetitions:", (choices == 1).sum(axis=1).mean())

g = normalize(f)
eps = [sum(a.is_epsilon() for _, a in p.arcs) for p in rand_paths(g, Rng(1), 100000)]
print("epsilon arcs per path after conflation:", np.mean(eps))

# an m-cycle of epsilon arcs becomes 2m states and m^2 arcs before trimming
for m in range(2, 6):
    ring = Wfst()
    ring.add_states(m)
    ring.set_start(0)
    for i in range(m):
        ring.add_arc(i, Arc(EPSILON, EPSILON, 0.5, (i + 1) % m))
    ring.set_final(0, 0.5)
    h = conflate_epsilon_cycles(ring, trim=False)
    print(f"m={m}: {h.num_states()} states, {h.num_arcs()} arcs")
