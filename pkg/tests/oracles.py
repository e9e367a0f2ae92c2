"""Brute-force reference computations used by the tests.

Nothing here calls into the algorithms under test beyond reading automaton
structure (states, arcs, finals).
"""

import itertools
from collections import defaultdict

import numpy as np

from sfst.fst import EPSILON, Arc, Wfst, connect


def behavior_table(fst, max_len, drop=1e-18, max_steps=20000):
    """Mass of every string pair with both sides of length <= ``max_len``.

    Path-by-path expansion grouped by ``(state, input, output)``; a path is
    abandoned once either string exceeds ``max_len`` or its mass drops below
    ``drop``.
    """
    table = defaultdict(float)
    if fst.start is None:
        return table
    frontier = {(fst.start, (), ()): 1.0}
    for _ in range(max_steps):
        if not frontier:
            break
        nxt = defaultdict(float)
        for (q, u, v), m in frontier.items():
            f = fst.final(q)
            if f:
                table[(u, v)] += m * f
            for arc in fst.arcs(q):
                u2 = u + (arc.ilabel,) if arc.ilabel != EPSILON else u
                v2 = v + (arc.olabel,) if arc.olabel != EPSILON else v
                if len(u2) > max_len or len(v2) > max_len:
                    continue
                nxt[(arc.target, u2, v2)] += m * arc.weight
        frontier = {k: m for k, m in nxt.items() if m > drop}
    else:
        raise RuntimeError("behavior_table did not converge")
    return table


def total_mass(fst, tol=1e-18, max_steps=10**6):
    """Grand total by power iteration over the state vector."""
    n = fst.num_states()
    if fst.start is None:
        return 0.0
    W = np.zeros((n, n))
    for q in range(n):
        for arc in fst.arcs(q):
            W[q, arc.target] += arc.weight
    f = np.array([fst.final(q) for q in range(n)])
    x = np.zeros(n)
    x[fst.start] = 1.0
    total = 0.0
    for _ in range(max_steps):
        total += x @ f
        x = x @ W
        if x.sum() < tol:
            return total
    raise RuntimeError("total_mass did not converge")


def enumerate_paths(fst):
    """All successful paths of an acyclic automaton as (arc-index tuple, weight)."""
    out = []

    def walk(q, choices, w):
        f = fst.final(q)
        if f > 0:
            out.append((choices + (0,), w * f))
        for i, arc in enumerate(fst.arcs(q)):
            walk(arc.target, choices + (i + 1,), w * arc.weight)

    walk(fst.start, (), 1.0)
    return out


def reachability_sccs(n, edges):
    """SCC partition from an O(n^3) transitive closure."""
    R = np.eye(n, dtype=bool)
    for s, t in edges:
        R[s, t] = True
    for k in range(n):
        R |= R[:, [k]] & R[[k], :]
    mutual = R & R.T
    return {frozenset(np.flatnonzero(mutual[q]).tolist()) for q in range(n)}


def collapse(seq, blank):
    out = []
    prev = None
    for x in seq:
        if x != prev and x != blank:
            out.append(x)
        prev = x
    return tuple(out)


def ctc_distribution(probs, blank_id):
    """Exact labeling distribution by enumerating all L^T frame sequences."""
    probs = np.asarray(probs)
    T, L = probs.shape
    dist = defaultdict(float)
    for seq in itertools.product(range(L), repeat=T):
        w = 1.0
        for i, j in enumerate(seq):
            w *= probs[i, j]
        dist[collapse([j + 1 for j in seq], blank_id)] += w
    return dict(dist)


def ctc_mode(probs, blank_id):
    dist = ctc_distribution(probs, blank_id)
    best = max(dist.values())
    return min(k for k, v in dist.items() if v == best), dist


def random_posterior(rng, T, L, concentration=1.0):
    return rng.dirichlet([concentration] * L, size=T)


def random_sfst(rng, n_states, n_symbols, eps_prob=0.35, transducer=True, max_out=3):
    """Random trim SFST with convergent (but not normalized) weights."""
    while True:
        fst = Wfst()
        fst.add_states(n_states)
        fst.set_start(0)
        for q in range(n_states):
            k = int(rng.integers(1, max_out + 1))
            has_final = rng.random() < 0.4 or q == n_states - 1
            shares = rng.dirichlet(np.ones(k + 1))
            scale = rng.uniform(0.3, 0.95)
            for i in range(k):
                t = int(rng.integers(0, n_states))
                if rng.random() < eps_prob:
                    il = ol = EPSILON
                else:
                    il = int(rng.integers(1, n_symbols + 1))
                    ol = int(rng.integers(1, n_symbols + 1)) if transducer else il
                fst.add_arc(q, Arc(il, ol, float(scale * shares[i + 1]), t))
            if has_final:
                fst.set_final(q, float(shares[0] * rng.uniform(0.5, 3.0)))
        fst = connect(fst)
        if fst.start is not None:
            return fst


def random_dag(rng, n_states, max_paths=200):
    """Random locally normalized acyclic SFST with at most ``max_paths`` paths."""
    while True:
        f = Wfst()
        f.add_states(n_states)
        f.set_start(0)
        for q in range(n_states - 1):
            k = int(rng.integers(1, 4))
            shares = rng.dirichlet(np.full(k + 1, 2.0))
            for i in range(k):
                t = int(rng.integers(q + 1, n_states))
                f.add_arc(q, Arc(int(rng.integers(1, 4)), int(rng.integers(1, 4)), float(shares[i + 1]), t))
            f.set_final(q, float(shares[0]))
        f.set_final(n_states - 1, 1.0)
        if len(enumerate_paths(f)) <= max_paths:
            return f
