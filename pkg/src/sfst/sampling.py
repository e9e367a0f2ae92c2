"""Random path and string-pair sampling from locally normalized SFSTs.

At each state the sampler makes one categorical draw over the outcomes
``[terminate, arc_1, ..., arc_d]`` with probabilities
``[f(q), w(arc_1), ..., w(arc_d)]``, by inverting the cumulative sum of
those weights in arc order.  When floating-point slack leaves the total
slightly below one, a uniform landing beyond the total goes to termination
if ``f(q) > 0`` and to the last arc otherwise.
"""

from __future__ import annotations

from bisect import bisect_right
from itertools import accumulate
from typing import NamedTuple

import numpy as np

from sfst.errors import EmptyAutomaton, EpsilonCyclic, NotNormalized, StepLimitExceeded
from sfst.fst import EPSILON, Path, is_epsilon_acyclic

RNG_ALGORITHM = "numpy.PCG64/SeedSequence/float64-stream"
SAMPLING_TOLERANCE = 1e-6
MAX_STEPS = 10**6


class Rng:
    """Seeded uniform stream backed by numpy's PCG64.

    The k-th value returned for a given ``(seed, stream)`` is the k-th
    double produced by ``Generator(PCG64(SeedSequence(seed, spawn_key=(stream,))))``
    regardless of how the calls are batched, so reruns are bit-exact.
    One ``Rng`` must not be shared between threads; use :meth:`spawn`.
    """

    algorithm = RNG_ALGORITHM

    def __init__(self, seed=0, stream=0, block=4096):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self._block = block
        self._buf = []
        self._pos = 0

    def spawn(self, stream):
        return Rng(self.seed, stream, self._block)

    def uniform(self):
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(self._block).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def uniforms(self, n):
        rest = self._buf[self._pos:self._pos + n]
        self._pos += len(rest)
        if len(rest) == n:
            return np.array(rest, dtype=float)
        return np.concatenate([np.array(rest, dtype=float), self._gen.random(n - len(rest))])

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream={self.stream}, algorithm={self.algorithm!r})"


def as_rng(rng):
    """Accept an :class:`Rng`, an integer seed, or ``None`` (seed 0)."""
    if isinstance(rng, Rng):
        return rng
    return Rng(0 if rng is None else rng)


class StringPair(NamedTuple):
    input: tuple
    output: tuple


def check_locally_normalized(fst, tol=1e-9):
    """States whose final weight plus outgoing arc weights differs from 1 by more than ``tol``."""
    bad = []
    for q in fst.states():
        total = fst.final(q) + sum(a.weight for a in fst._arcs[q])
        if abs(total - 1.0) > tol:
            bad.append(q)
    return bad


class Sampler:
    """Sampling tables compiled once from a frozen-by-convention automaton.

    ``allow_epsilon_cycles=True`` is a diagnostic mode: epsilon-cyclic
    input is accepted and only the step cap guards termination.
    """

    def __init__(self, fst, tol=SAMPLING_TOLERANCE, allow_epsilon_cycles=False, max_steps=MAX_STEPS):
        if fst.start is None:
            raise EmptyAutomaton("cannot sample from an empty automaton")
        bad = check_locally_normalized(fst, tol)
        if bad:
            raise NotNormalized(f"{len(bad)} state(s) not locally normalized, e.g. state {bad[0]}")
        if not allow_epsilon_cycles and not is_epsilon_acyclic(fst):
            raise EpsilonCyclic("epsilon graph has a cycle; conflate epsilon cycles first")
        self.fst = fst
        self.max_steps = max_steps
        self._arcs = [fst.arcs(q) for q in fst.states()]
        self._finals = [fst.final(q) for q in fst.states()]
        self._cum = [
            list(accumulate([self._finals[q]] + [a.weight for a in self._arcs[q]]))
            for q in fst.states()
        ]

    def _choose(self, q, u):
        k = bisect_right(self._cum[q], u)
        if k > len(self._arcs[q]):
            k = 0 if self._finals[q] > 0.0 else len(self._arcs[q])
        return k

    def draw(self, rng):
        """One random path; returns a :class:`~sfst.fst.Path`."""
        q = self.fst.start
        arcs = []
        for _ in range(self.max_steps):
            k = self._choose(q, rng.uniform())
            if k == 0:
                return Path(self.fst.start, arcs)
            arc = self._arcs[q][k - 1]
            arcs.append((q, arc))
            q = arc.target
        raise StepLimitExceeded(f"path exceeded {self.max_steps} steps")

    def draw_labels(self, rng):
        """Input labels (epsilons stripped) of one random path, without building a Path."""
        q = self.fst.start
        labels = []
        for _ in range(self.max_steps):
            k = self._choose(q, rng.uniform())
            if k == 0:
                return tuple(labels)
            arc = self._arcs[q][k - 1]
            if arc.ilabel != EPSILON:
                labels.append(arc.ilabel)
            q = arc.target
        raise StepLimitExceeded(f"path exceeded {self.max_steps} steps")

    def draw_choices(self, rng, n):
        """Draw ``n`` paths at once.

        Returns an ``(n, steps)`` int array; entry ``k >= 1`` means the
        (k-1)-th arc of the current state was taken, ``0`` means the walk
        terminated there and ``-1`` pads finished rows.  Uniforms are
        consumed step-major over the still-running walkers, so the draws
        differ from ``n`` calls of :meth:`draw` but are equally reproducible.
        """
        nstates = self.fst.num_states()
        width = max(len(a) for a in self._arcs) if nstates else 0
        cum = np.full((nstates, width + 1), np.inf)
        tgt = np.zeros((nstates, max(width, 1)), dtype=np.int64)
        for q in range(nstates):
            c = self._cum[q]
            cum[q, : len(c)] = c
            for i, arc in enumerate(self._arcs[q]):
                tgt[q, i] = arc.target
        deg = np.array([len(a) for a in self._arcs], dtype=np.int64)
        has_final = np.array(self._finals) > 0.0

        state = np.full(n, self.fst.start, dtype=np.int64)
        running = np.arange(n)
        columns = []
        while running.size:
            if len(columns) >= self.max_steps:
                raise StepLimitExceeded(f"path exceeded {self.max_steps} steps")
            st = state[running]
            u = rng.uniforms(running.size)
            k = (cum[st] <= u[:, None]).sum(axis=1)
            over = k > deg[st]
            if over.any():
                k[over] = np.where(has_final[st[over]], 0, deg[st[over]])
            col = np.full(n, -1, dtype=np.int64)
            col[running] = k
            columns.append(col)
            moving = k > 0
            state[running[moving]] = tgt[st[moving], k[moving] - 1]
            running = running[moving]
        return np.stack(columns, axis=1) if columns else np.zeros((n, 0), dtype=np.int64)

    def path_from_choices(self, row):
        q = self.fst.start
        arcs = []
        for k in row:
            if k <= 0:
                break
            arc = self._arcs[q][k - 1]
            arcs.append((q, arc))
            q = arc.target
        return Path(self.fst.start, arcs)


def rand_path(fst, rng, **kwargs):
    """Draw a successful path with probability equal to its weight."""
    return Sampler(fst, **kwargs).draw(as_rng(rng))


def rand_paths(fst, rng, n, **kwargs):
    """Draw ``n`` paths with the vectorized sampler."""
    sampler = Sampler(fst, **kwargs)
    choices = sampler.draw_choices(as_rng(rng), n)
    return [sampler.path_from_choices(row) for row in choices]


def rand_string_pair(fst, rng, **kwargs):
    """Draw ``(istr, ostr)`` of a random path, epsilons removed."""
    path = rand_path(fst, rng, **kwargs)
    return StringPair(path.istr(), path.ostr())


def rand_string_pairs(fst, rng, n, **kwargs):
    return [StringPair(p.istr(), p.ostr()) for p in rand_paths(fst, rng, n, **kwargs)]
