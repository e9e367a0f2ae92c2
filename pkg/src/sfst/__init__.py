"""Stochastic finite-state transducers: normalization, path sampling and
sampling-based CTC decoding."""

from sfst.algebra import (
    behavior_eval,
    compose,
    conflate_epsilon_cycles,
    grand_total,
    linear,
    normalize,
    project,
    reverse,
    shortest_distance,
    shortest_path,
    weight_push,
)
from sfst.ctc import (
    CtcPosterior,
    DecodeConfig,
    DecodeResult,
    StopReason,
    Strategy,
    best_path_labeling,
    build_labeling_fst,
    build_lattice,
    collapse_labeling,
    ctc_decode,
    labeling_probability,
    naive_decode,
    read_posterior,
    occurrence_exceed_prob,
    preimage_fst,
    unseen_mode_prob,
    write_posterior,
)
from sfst.errors import SfstError
from sfst.fst import (
    EPSILON,
    Arc,
    Path,
    Wfst,
    connect,
    epsilon_scc_arc_filter,
    is_epsilon_acyclic,
    path_weight,
    read_text,
    scc,
    write_text,
)
from sfst.sampling import (
    Rng,
    Sampler,
    check_locally_normalized,
    rand_path,
    rand_paths,
    rand_string_pair,
    rand_string_pairs,
)
from sfst.semiring import Semiring, star

__version__ = "0.1.0"
