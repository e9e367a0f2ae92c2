"""
Sampling-based CTC decoding
===========================

The most probable frame sequence need not collapse to the most probable
labeling. With two frames of {a: 0.4, blank: 0.6} the best path is all blanks,
yet "a" carries 0.64 of the posterior mass.
"""

import numpy as np

from sfst import (
    CtcPosterior,
    DecodeConfig,
    Strategy,
    best_path_labeling,
    build_labeling_fst,
    build_lattice,
    ctc_decode,
    labeling_probability,
    naive_decode,
)

post = CtcPosterior([[0.4, 0.6], [0.4, 0.6]], ["a", "_"], 1)
lattice = build_lattice(post)
B = build_labeling_fst(post.L, post.blank_id)

print("best path labeling:", post.names(best_path_labeling(lattice, B)))
print("p(a) =", labeling_probability(lattice, B, (1,)))
print("p('') =", labeling_probability(lattice, B, ()))

for strategy in Strategy:
    res = ctc_decode(lattice, B, DecodeConfig(600, 0.01, strategy, seed=7))
    print(strategy.value, res.to_dict(post.symbols))

# a longer random posterior: the early stopping rule usually ends well before max_draws
rng = np.random.default_rng(3)
probs = rng.dirichlet(np.ones(4), size=8)
post = CtcPosterior(probs, ["a", "b", "c", "_"], 3)
lattice = build_lattice(post)
B = build_labeling_fst(post.L, post.blank_id)
res = ctc_decode(lattice, B, DecodeConfig(600, 0.01, Strategy.SECOND_OCCURRENCE, seed=1))
print(res.to_dict(post.symbols))
print("naive, 600 draws:", post.names(naive_decode(lattice, B, 600, seed=1).labeling))
