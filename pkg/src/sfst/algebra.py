"""Weighted-automata algorithms over the probability semiring.

Distances are computed exactly: the reachable arc graph is split into
strongly connected components, cyclic components are closed by semiring
Gauss-Jordan elimination (each pivot closed with :func:`~sfst.semiring.star`),
and mass flows between components in topological order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from sfst.errors import (
    DivergentClosure,
    DivergentTotal,
    EmptyAutomaton,
    EpsilonAmbiguity,
    InvalidLabel,
    ZeroMassState,
)
from sfst.fst import (
    EPSILON,
    Arc,
    Path,
    Wfst,
    _tarjan,
    any_arc,
    connect,
    epsilon_arc,
    epsilon_scc_arc_filter,
    scc_components,
)
from sfst.semiring import SINGULARITY_TOLERANCE, Semiring, star

TIE_RTOL = 1e-12


@dataclass
class DistanceVector:
    source: int
    values: dict = field(default_factory=dict)

    def __getitem__(self, q):
        return self.values.get(q, 0.0)

    def __contains__(self, q):
        return q in self.values


def _accumulate(n, edges, init, tolerance=SINGULARITY_TOLERANCE):
    """Return ``x = init . (I + A + A^2 + ...)`` restricted to reachable states.

    ``edges[q]`` is a list of ``(target, weight)`` pairs; ``init`` maps
    states to initial mass.  Raises :class:`DivergentClosure` when a
    reachable cycle has weight >= 1.
    """
    reachable = [False] * n
    todo = list(init)
    for q in todo:
        reachable[q] = True
    while todo:
        q = todo.pop()
        for t, _ in edges[q]:
            if not reachable[t]:
                reachable[t] = True
                todo.append(t)
    local = [q for q in range(n) if reachable[q]]
    pos = {q: i for i, q in enumerate(local)}
    comps = _tarjan(len(local), lambda i: [pos[t] for t, _ in edges[local[i]]])

    mass = dict(init)
    values = {}
    for comp in reversed(comps):
        members = [local[i] for i in comp]
        if len(members) == 1:
            q = members[0]
            loop = sum(w for t, w in edges[q] if t == q)
            m = mass.get(q, 0.0)
            values[q] = m * star(loop, tolerance) if loop else m
        else:
            members.sort()
            idx = {q: i for i, q in enumerate(members)}
            k = len(members)
            closure = np.zeros((k, k))
            for q in members:
                for t, w in edges[q]:
                    if t in idx:
                        closure[idx[q], idx[t]] += w
            for p in range(k):
                s = star(closure[p, p], tolerance)
                col = closure[:, p].copy()
                row = closure[p, :].copy()
                closure += s * np.outer(col, row)
            closure += np.eye(k)
            inflow = np.array([mass.get(q, 0.0) for q in members])
            out = inflow @ closure
            for q, v in zip(members, out):
                values[q] = float(v)
        inside = set(members)
        for q in members:
            vq = values[q]
            if vq == 0.0:
                continue
            for t, w in edges[q]:
                if t not in inside:
                    mass[t] = mass.get(t, 0.0) + vq * w
    return values


def _forward_edges(fst, arc_filter=any_arc):
    return [
        [(a.target, a.weight) for a in fst._arcs[q] if arc_filter(q, a)]
        for q in fst.states()
    ]


def _backward_edges(fst):
    edges = [[] for _ in fst.states()]
    for src, arc in fst.iter_arcs():
        edges[arc.target].append((src, arc.weight))
    return edges


def shortest_distance(fst, source, arc_filter=any_arc, tolerance=SINGULARITY_TOLERANCE):
    """Sum of arc-weight products over all filtered paths leaving ``source``.

    The empty path counts, so ``d[source] >= 1``.
    """
    fst._check_state(source)
    values = _accumulate(fst.num_states(), _forward_edges(fst, arc_filter), {source: 1.0}, tolerance)
    return DistanceVector(source, values)


def shortest_distance_backward(fst, tolerance=SINGULARITY_TOLERANCE):
    """Mass from each state to termination, ``beta[q] = sum_paths w(path) f(end)``."""
    values = _accumulate(fst.num_states(), _backward_edges(fst), dict(fst.finals), tolerance)
    return [values.get(q, 0.0) for q in fst.states()]


def grand_total(fst):
    """Total weight of all successful paths."""
    if fst.start is None:
        return 0.0
    d = shortest_distance(fst, fst.start)
    return float(sum(d[q] * w for q, w in fst.finals.items()))


def linear(labels, side="acceptor"):
    """Chain automaton for a label sequence; all weights 1.

    ``side`` is ``"acceptor"`` (x:x), ``"input"`` (x:eps) or ``"output"`` (eps:x).
    """
    fst = Wfst()
    q = fst.add_state()
    fst.set_start(q)
    for x in labels:
        if x == EPSILON:
            raise InvalidLabel("epsilon inside a linear string")
        r = fst.add_state()
        il = x if side in ("acceptor", "input") else EPSILON
        ol = x if side in ("acceptor", "output") else EPSILON
        fst.add_arc(q, Arc(il, ol, 1.0, r))
        q = r
    fst.set_final(q, 1.0)
    return fst


def compose(a, b):
    """Composition with epsilons allowed on at most one of the shared tapes.

    States are numbered in breadth-first discovery order from the pair of
    start states; only accessible pairs are built.
    """
    a_eps = any(arc.olabel == EPSILON for _, arc in a.iter_arcs())
    b_eps = any(arc.ilabel == EPSILON for _, arc in b.iter_arcs())
    if a_eps and b_eps:
        raise EpsilonAmbiguity("both operands have epsilons on the shared tape")
    out = Wfst(symbols=a.symbols or b.symbols)
    if a.start is None or b.start is None:
        return out
    b_index = []
    for q in b.states():
        by_label = {}
        for arc in b._arcs[q]:
            by_label.setdefault(arc.ilabel, []).append(arc)
        b_index.append(by_label)

    ids = {}
    queue = deque()

    def state_of(pair):
        sid = ids.get(pair)
        if sid is None:
            sid = ids[pair] = out.add_state()
            queue.append(pair)
        return sid

    out.start = state_of((a.start, b.start))
    arcs = out._arcs
    while queue:
        qa, qb = pair = queue.popleft()
        src = ids[pair]
        fw = a.final(qa) * b.final(qb)
        if fw > 0.0:
            out.finals[src] = fw
        bq = b_index[qb]
        for ea in a._arcs[qa]:
            if ea.olabel == EPSILON:
                dst = state_of((ea.target, qb))
                arcs[src].append(Arc(ea.ilabel, EPSILON, ea.weight, dst))
                continue
            for eb in bq.get(ea.olabel, ()):
                dst = state_of((ea.target, eb.target))
                arcs[src].append(Arc(ea.ilabel, eb.olabel, ea.weight * eb.weight, dst))
        for eb in bq.get(EPSILON, ()):
            dst = state_of((qa, eb.target))
            arcs[src].append(Arc(EPSILON, eb.olabel, eb.weight, dst))
    return out


def project(fst, side="input"):
    """Copy one tape onto the other (``side`` is ``"input"`` or ``"output"``)."""
    if side not in ("input", "output"):
        raise ValueError(f"side must be 'input' or 'output', got {side!r}")
    out = fst.copy()
    for q in out.states():
        if side == "input":
            out._arcs[q] = [a._replace(olabel=a.ilabel) for a in out._arcs[q]]
        else:
            out._arcs[q] = [a._replace(ilabel=a.olabel) for a in out._arcs[q]]
    return out


def invert(fst):
    out = fst.copy()
    for q in out.states():
        out._arcs[q] = [a._replace(ilabel=a.olabel, olabel=a.ilabel) for a in out._arcs[q]]
    return out


def reverse(fst):
    """Reversed automaton with a fresh epsilon-initial state (state 0).

    Former final weights become weights of the initial epsilon arcs; the
    former start state becomes the only final state.
    """
    out = Wfst(fst.semiring, fst.symbols)
    if fst.start is None:
        return out
    out.add_states(fst.num_states() + 1)
    out.start = 0
    for src, arc in fst.iter_arcs():
        out._arcs[arc.target + 1].append(arc._replace(target=src + 1))
    for q, w in sorted(fst.finals.items()):
        out._arcs[0].append(Arc(EPSILON, EPSILON, w, q + 1))
    out.finals[fst.start + 1] = 1.0
    return out


def behavior_eval(fst, u, v):
    """Total weight of successful paths with input ``u`` and output ``v``."""
    left = compose(linear(u), fst)
    return grand_total(compose(left, linear(v)))


def weight_push(fst):
    """Reweight toward the final states so every state is locally normalized.

    Each arc ``e`` becomes ``w(e) * beta(tgt) / beta(src)`` and each final
    weight ``f(q) / beta(q)``, where ``beta`` is the backward mass.  The
    topology is unchanged and the behavior is divided by the grand total.
    """
    if fst.start is None:
        raise EmptyAutomaton("cannot push an empty automaton")
    try:
        beta = shortest_distance_backward(fst)
    except DivergentClosure as exc:
        raise DivergentTotal(str(exc)) from exc
    for q, b in enumerate(beta):
        if b <= 0.0:
            raise ZeroMassState(f"state {q} cannot reach a final state; connect() first")
    out = Wfst(fst.semiring, fst.symbols)
    out.add_states(fst.num_states())
    out.start = fst.start
    for q in fst.states():
        bq = beta[q]
        out._arcs[q] = [a._replace(weight=a.weight * beta[a.target] / bq) for a in fst._arcs[q]]
        if q in fst.finals:
            out.finals[q] = fst.finals[q] / bq
    return out


def _nontrivial_components(fst, comps, comp_of):
    nontrivial = set()
    for cid, comp in enumerate(comps):
        if len(comp) > 1:
            nontrivial.add(cid)
        else:
            q = comp[0]
            if any(a.is_epsilon() and a.target == q for a in fst._arcs[q]):
                nontrivial.add(cid)
    return nontrivial


def conflate_epsilon_cycles(fst, trim=True):
    """Make the epsilon graph acyclic without changing the behavior.

    Every state ``q`` of a cyclic epsilon component gets a twin ``s`` with
    epsilon arcs ``s -> t`` weighted by the epsilon-closure distance from
    ``q`` to each member ``t``.  Epsilon arcs inside the component are
    deleted and every other arc into ``q`` is redirected to ``s``.  With
    ``trim=False`` the result is returned before :func:`connect`.
    """
    out = fst.copy()
    comps = scc_components(fst, epsilon_arc)
    comp_of = [0] * fst.num_states()
    for cid, comp in enumerate(comps):
        for q in comp:
            comp_of[q] = cid
    nontrivial = _nontrivial_components(fst, comps, comp_of)
    if not nontrivial:
        return connect(out) if trim else out

    split = {}
    original = fst.num_states()
    for state in range(original):
        component = comp_of[state]
        if component not in nontrivial:
            continue
        in_scc = epsilon_scc_arc_filter(comp_of, component)
        distance = shortest_distance(fst, state, in_scc)
        s = out.add_state()
        for t in sorted(comps[component]):
            out._arcs[s].append(Arc(EPSILON, EPSILON, distance[t], t))
        assert state not in split, "state split twice"
        split[state] = s

    # collect first, then apply: the arc lists are rewritten wholesale
    for state in range(original):
        in_scc = epsilon_scc_arc_filter(comp_of, comp_of[state])
        kept = []
        for arc in fst._arcs[state]:
            if in_scc(state, arc):
                continue
            if arc.target in split:
                arc = arc._replace(target=split[arc.target])
            kept.append(arc)
        out._arcs[state] = kept
    if out.start in split:
        out.start = split[out.start]
    return connect(out) if trim else out


def normalize(fst):
    """Conflate epsilon cycles, trim, then push weights."""
    out = connect(conflate_epsilon_cycles(fst))
    if out.start is None:
        raise EmptyAutomaton("automaton has no successful path")
    return weight_push(out)


def _better(w1, key1, w2, key2):
    if w1 > w2 * (1.0 + TIE_RTOL) and w1 - w2 > 0.0:
        return True
    if w2 > w1 * (1.0 + TIE_RTOL) and w2 - w1 > 0.0:
        return False
    return key1 < key2


def shortest_path(fst):
    """Most probable successful path under the max-times semiring.

    Weight ties (relative 1e-12) go to the lexicographically smaller input
    label sequence, then to the shorter path.
    """
    if fst.start is None:
        raise EmptyAutomaton("no successful path")
    n = fst.num_states()
    best_w = [0.0] * n
    best_key = [None] * n
    best_arcs = [None] * n
    best_w[fst.start] = 1.0
    best_key[fst.start] = ((), 0)
    best_arcs[fst.start] = ()

    def relax(q):
        changed = []
        wq, (labels, length), arcs = best_w[q], best_key[q], best_arcs[q]
        for arc in fst._arcs[q]:
            t = arc.target
            w = wq * arc.weight
            if w <= 0.0:
                continue
            key = (labels + ((arc.ilabel,) if arc.ilabel != EPSILON else ()), length + 1)
            if best_key[t] is None or _better(w, key, best_w[t], best_key[t]):
                best_w[t], best_key[t], best_arcs[t] = w, key, arcs + ((q, arc),)
                changed.append(t)
        return changed

    comps = scc_components(fst)
    acyclic = all(
        len(c) == 1 and all(a.target != c[0] for a in fst._arcs[c[0]]) for c in comps
    )
    if acyclic:
        for comp in reversed(comps):
            q = comp[0]
            if best_key[q] is not None:
                relax(q)
    else:
        queue = deque([fst.start])
        queued = {fst.start}
        budget = max(1, n) * max(1, fst.num_arcs()) + n
        while queue:
            budget -= 1
            if budget < 0:
                raise DivergentClosure("max-times relaxation does not converge")
            q = queue.popleft()
            queued.discard(q)
            for t in relax(q):
                if t not in queued:
                    queued.add(t)
                    queue.append(t)

    winner = None
    for q, f in sorted(fst.finals.items()):
        if best_key[q] is None:
            continue
        w = best_w[q] * f
        if w <= 0.0:
            continue
        if winner is None or _better(w, best_key[q], winner[0], best_key[winner[1]]):
            winner = (w, q)
    if winner is None:
        raise EmptyAutomaton("no successful path")
    return Path(fst.start, list(best_arcs[winner[1]]))


def is_locally_normalized(fst, tol=1e-9):
    return all(
        abs(fst.final(q) + sum(a.weight for a in fst._arcs[q]) - 1.0) <= tol
        for q in fst.states()
    )


__all__ = [
    "DistanceVector",
    "Semiring",
    "behavior_eval",
    "compose",
    "conflate_epsilon_cycles",
    "grand_total",
    "invert",
    "is_locally_normalized",
    "linear",
    "normalize",
    "project",
    "reverse",
    "shortest_distance",
    "shortest_distance_backward",
    "shortest_path",
    "weight_push",
]
