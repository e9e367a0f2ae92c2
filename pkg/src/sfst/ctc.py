"""CTC decoding by sampling.

A ``T x L`` posterior matrix becomes a lattice acceptor whose paths are
frame-level symbol sequences.  The labeling transducer collapses repeated
symbols and drops blanks.  Labeling probabilities are computed exactly by
composing the lattice with the preimage of a labeling, and the decoder
combines random draws, exact evaluations and a Beta tail bound to decide
when the mode has (very likely) been found.

Symbol ids: column ``j`` of the posterior is label id ``j + 1`` in every
automaton; the blank is an ordinary label, never epsilon.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from sfst.algebra import compose, grand_total, linear, shortest_path
from sfst.errors import EmptySample, InvalidPosterior, ParseError
from sfst.fst import EPSILON, Arc, Wfst, connect
from sfst.sampling import Rng, Sampler

ROW_TOLERANCE = 1e-6


@dataclass
class CtcPosterior:
    probs: np.ndarray
    labels: list
    blank: int

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        self.labels = [str(x) for x in self.labels]
        p = self.probs
        if p.ndim != 2:
            raise InvalidPosterior("probs must be a T x L matrix")
        T, L = p.shape
        if T < 1 or L < 2:
            raise InvalidPosterior(f"need T >= 1 and L >= 2, got {T} x {L}")
        if len(self.labels) != L:
            raise InvalidPosterior(f"{len(self.labels)} label names for {L} columns")
        if len(set(self.labels)) != L:
            raise InvalidPosterior("label names must be distinct")
        if not 0 <= self.blank < L:
            raise InvalidPosterior(f"blank index {self.blank} out of range")
        if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
            raise InvalidPosterior("entries must lie in [0, 1]")
        rows = p.sum(axis=1)
        worst = int(np.argmax(np.abs(rows - 1.0)))
        if abs(rows[worst] - 1.0) > ROW_TOLERANCE:
            raise InvalidPosterior(f"row {worst} sums to {rows[worst]!r}")

    @property
    def T(self):
        return self.probs.shape[0]

    @property
    def L(self):
        return self.probs.shape[1]

    @property
    def blank_id(self):
        return self.blank + 1

    @property
    def symbols(self):
        return {j + 1: name for j, name in enumerate(self.labels)}

    def ids(self, names):
        index = {name: j + 1 for j, name in enumerate(self.labels)}
        try:
            return tuple(index[x] for x in names)
        except KeyError as exc:
            raise KeyError(f"unknown label {exc.args[0]!r}") from None

    def names(self, ids):
        return [self.labels[i - 1] for i in ids]


def read_posterior(data):
    """Parse a posterior file: the ``labels:`` text layout or a JSON object."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    if data.lstrip().startswith("{"):
        try:
            obj = json.loads(data)
            return CtcPosterior(np.array(obj["probs"], dtype=float), obj["labels"], int(obj["blank"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidPosterior):
                raise
            raise ParseError(f"bad JSON posterior: {exc}") from None
    lines = [(i, ln) for i, ln in enumerate(data.splitlines(), 1) if ln.strip()]
    if not lines:
        raise ParseError("empty posterior file", 1)
    lineno, header = lines[0]
    if not header.startswith("labels:"):
        raise ParseError("first line must start with 'labels:'", lineno)
    labels = header[len("labels:"):].split()
    rows = []
    for lineno, line in lines[1:]:
        fields = line.split()
        if len(fields) != len(labels):
            raise ParseError(f"expected {len(labels)} probabilities, got {len(fields)}", lineno)
        try:
            rows.append([float(x) for x in fields])
        except ValueError:
            raise ParseError("bad probability", lineno) from None
    if not rows:
        raise InvalidPosterior("no time steps")
    return CtcPosterior(np.array(rows), labels, len(labels) - 1)


def write_posterior(post):
    """Serialize to the text layout (columns reordered so the blank is last)."""
    order = [j for j in range(post.L) if j != post.blank] + [post.blank]
    lines = ["labels: " + " ".join(post.labels[j] for j in order)]
    for row in post.probs:
        lines.append(" ".join(repr(float(row[j])) for j in order))
    return ("\n".join(lines) + "\n").encode("utf-8")


def build_lattice(post):
    """Chain acceptor with T+1 states and one arc per (frame, symbol)."""
    fst = Wfst(symbols=post.symbols)
    fst.add_states(post.T + 1)
    fst.set_start(0)
    for i, row in enumerate(post.probs):
        fst._arcs[i] = [Arc(j + 1, j + 1, float(w), i + 1) for j, w in enumerate(row)]
    fst.set_final(post.T, 1.0)
    return fst


def collapse_labeling(symbols, blank):
    """Collapse runs of repeated symbols, then remove blanks."""
    out = []
    prev = None
    for x in symbols:
        if x != prev and x != blank:
            out.append(x)
        prev = x
    return tuple(out)


def build_labeling_fst(num_labels, blank_id):
    """Unweighted functional transducer computing :func:`collapse_labeling`.

    ``num_labels`` counts all symbols including the blank; symbol ids run
    from 1 to ``num_labels``.  State 0 is the start (and after-blank) state;
    every non-blank symbol gets its own state remembering it was just read.
    """
    if not isinstance(num_labels, int):
        num_labels = len(num_labels)
    if num_labels < 2:
        raise ValueError("need at least one label plus the blank")
    ids = range(1, num_labels + 1)
    fst = Wfst()
    fst.add_state()
    state_of = {}
    for x in ids:
        if x != blank_id:
            state_of[x] = fst.add_state()
    fst.set_start(0)
    for q in fst.states():
        for x in ids:
            if x == blank_id:
                fst._arcs[q].append(Arc(x, EPSILON, 1.0, 0))
            elif state_of[x] == q:
                fst._arcs[q].append(Arc(x, EPSILON, 1.0, q))
            else:
                fst._arcs[q].append(Arc(x, x, 1.0, state_of[x]))
        fst.set_final(q, 1.0)
    return fst


class FunctionalMap:
    """Deterministic traversal of an input-deterministic, unweighted transducer."""

    def __init__(self, fst):
        self.start = fst.start
        self.table = []
        for q in fst.states():
            row = {}
            for arc in fst._arcs[q]:
                if arc.ilabel in row or arc.ilabel == EPSILON:
                    raise ValueError(f"state {q} is not input-deterministic")
                row[arc.ilabel] = (arc.olabel, arc.target)
            self.table.append(row)
        self.finals = fst.finals

    def __call__(self, symbols):
        q = self.start
        out = []
        for x in symbols:
            olabel, q = self.table[q][x]
            if olabel != EPSILON:
                out.append(olabel)
        if q not in self.finals:
            raise ValueError("input not accepted")
        return tuple(out)


def preimage_fst(labeling_fst, labeling):
    """Transducer whose input side accepts exactly the sequences mapping to ``labeling``."""
    return connect(compose(labeling_fst, linear(labeling)))


def labeling_probability(lattice, labeling_fst, labeling):
    """Exact posterior mass of ``labeling``: total weight of lattice o preimage."""
    return grand_total(compose(lattice, preimage_fst(labeling_fst, labeling)))


def unseen_mode_prob(p_star, t, n):
    """``Pr(p_star <= P0 <= 1 - t)`` for ``P0 ~ Beta(1, n + 1)``."""
    return max(0.0, (1.0 - p_star) ** (n + 1) - t ** (n + 1))


def _beta_cdf_int(x, a, b):
    """Regularized incomplete beta ``I_x(a, b)`` for positive integers ``a, b``.

    Uses ``I_x(a, b) = P(Binomial(a + b - 1, x) >= a)``, summing whichever
    tail is shorter in log space.
    """
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    m = a + b - 1
    lx, l1x = math.log(x), math.log1p(-x)
    lgm = math.lgamma(m + 1)

    def term(j):
        return math.exp(lgm - math.lgamma(j + 1) - math.lgamma(m - j + 1) + j * lx + (m - j) * l1x)

    if a > m - a:
        return math.fsum(term(j) for j in range(a, m + 1))
    return max(0.0, 1.0 - math.fsum(term(j) for j in range(0, a)))


def occurrence_exceed_prob(c, n, p_star, t):
    """``Pr(p_star <= P <= 1 - t)`` for ``P ~ Beta(c + 1, n - c + 2)``."""
    if not 0 <= c <= n:
        raise ValueError(f"need 0 <= c <= n, got c={c}, n={n}")
    hi = 1.0 - t
    if p_star > hi:
        return 0.0
    a, b = c + 1, n - c + 2
    return max(0.0, _beta_cdf_int(hi, a, b) - _beta_cdf_int(p_star, a, b))


class Strategy(enum.Enum):
    NEVER = "never"
    ALWAYS = "always"
    SECOND_OCCURRENCE = "second"
    BETA_TEST = "beta"


class StopReason(enum.Enum):
    MODE_CERTAIN = "ModeCertain"
    EARLY_STOPPED = "EarlyStopped"
    DRAWS_EXHAUSTED = "DrawsExhausted"


@dataclass
class DecodeConfig:
    max_draws: int = 600
    theta: float = 0.01
    strategy: Strategy = Strategy.SECOND_OCCURRENCE
    seed: int = 0
    # test for early stopping only every `check_every` draws
    check_every: int = 1
    record_trace: bool = False

    def __post_init__(self):
        self.strategy = Strategy(self.strategy)
        if self.max_draws < 0:
            raise ValueError("max_draws must be >= 0")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.check_every < 1:
            raise ValueError("check_every must be >= 1")


@dataclass
class DecodeResult:
    labeling: tuple
    probability: Optional[float]
    draws_used: int
    probs_computed: int
    seen_mass: float
    stop_reason: StopReason
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self, symbols=None):
        if symbols:
            labeling = " ".join(symbols.get(x, str(x)) for x in self.labeling)
        else:
            labeling = " ".join(str(x) for x in self.labeling)
        return {
            "labeling": labeling,
            "probability": self.probability,
            "draws_used": self.draws_used,
            "probs_computed": self.probs_computed,
            "seen_mass": self.seen_mass,
            "stop_reason": self.stop_reason.value,
        }


def _should_compute(strategy, c, n, p_star, t, theta):
    if strategy is Strategy.ALWAYS:
        return True
    if strategy is Strategy.SECOND_OCCURRENCE:
        return c > 1
    if strategy is Strategy.BETA_TEST:
        return occurrence_exceed_prob(c, n, p_star, t) >= theta
    return False


def _most_frequent(counts):
    best = max(counts.values())
    return min(lab for lab, c in counts.items() if c == best)


def _clamp(t):
    return min(1.0, max(0.0, t))


def best_path_labeling(lattice, labeling_fst):
    """Labeling of the single most probable lattice path."""
    return FunctionalMap(labeling_fst)(shortest_path(lattice).ilabels)


def ctc_decode(lattice, labeling_fst, cfg=None):
    """Sampling-based search for the most probable labeling.

    The best-path labeling seeds the search.  Each iteration draws a path,
    maps it to a labeling, possibly evaluates that labeling's exact
    probability (per ``cfg.strategy``), and stops once the best labeling
    provably dominates all unseen mass (``ModeCertain``), once an unseen
    better labeling is unlikely at level ``cfg.theta`` (``EarlyStopped``),
    or when ``cfg.max_draws`` is reached.

    With ``Strategy.NEVER`` no probability is computed and the most frequent
    sampled labeling is returned (the best-path labeling when no draws are
    made).  ``n`` in the tail bounds counts sampled draws only.
    """
    cfg = cfg or DecodeConfig()
    to_labeling = FunctionalMap(labeling_fst)
    strategy = cfg.strategy
    evaluate = strategy is not Strategy.NEVER
    trace = []

    best = to_labeling(shortest_path(lattice).ilabels)
    probs_computed = 0
    p_star = 0.0
    if evaluate:
        p_star = labeling_probability(lattice, labeling_fst, best)
        probs_computed = 1
        if p_star > 0.5:
            return DecodeResult(best, p_star, 0, probs_computed, _clamp(p_star), StopReason.MODE_CERTAIN)

    counts = Counter({best: 1})
    sampled = Counter()
    known = {best}
    t = _clamp(p_star) if evaluate else 0.0
    sampler = Sampler(lattice)
    rng = Rng(cfg.seed)
    stop = StopReason.DRAWS_EXHAUSTED
    n = 0
    for n in range(1, cfg.max_draws + 1):
        lab = to_labeling(sampler.draw_labels(rng))
        counts[lab] += 1
        sampled[lab] += 1
        certain = False
        if lab not in known and _should_compute(strategy, counts[lab], n, p_star, t, cfg.theta):
            known.add(lab)
            p = labeling_probability(lattice, labeling_fst, lab)
            probs_computed += 1
            t = _clamp(t + p)
            if p > p_star or (p == p_star and lab < best):
                best, p_star = lab, p
            certain = p_star > 1.0 - t
        if cfg.record_trace:
            trace.append((n, t, p_star))
        if certain:
            stop = StopReason.MODE_CERTAIN
            break
        if n % cfg.check_every == 0 and unseen_mode_prob(p_star, t, n) < cfg.theta:
            stop = StopReason.EARLY_STOPPED
            break

    if not evaluate:
        label = _most_frequent(sampled) if sampled else best
        return DecodeResult(label, None, n, 0, 0.0, stop, trace)
    return DecodeResult(best, p_star, n, probs_computed, t, stop, trace)


def naive_decode(lattice, labeling_fst, draws, seed=0):
    """Return the most frequent labeling among ``draws`` samples (ties: smallest)."""
    if draws < 1:
        raise EmptySample("naive decoding needs at least one draw")
    to_labeling = FunctionalMap(labeling_fst)
    sampler = Sampler(lattice)
    rng = Rng(seed)
    counts = Counter(to_labeling(sampler.draw_labels(rng)) for _ in range(draws))
    return DecodeResult(_most_frequent(counts), None, draws, 0, 0.0, StopReason.DRAWS_EXHAUSTED)


def decode_posterior(post, cfg=None):
    """Convenience wrapper: build both automata from ``post`` and decode."""
    lattice = build_lattice(post)
    return ctc_decode(lattice, build_labeling_fst(post.L, post.blank_id), cfg)
