"""Mutable weighted finite-state transducers and structural utilities.

States are dense integer ids; each state owns a list of outgoing arcs kept
in insertion order.  Label id 0 is reserved for epsilon.  A state absent
from ``finals`` has final weight zero.
"""

from __future__ import annotations

import io
import math
import operator
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Optional

from sfst.errors import InvalidState, ParseError
from sfst.semiring import Semiring, check_weight

EPSILON = 0


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    weight: float
    target: int

    def is_epsilon(self):
        return self.ilabel == EPSILON and self.olabel == EPSILON


ArcFilter = Callable[[int, Arc], bool]


def any_arc(src, arc):
    return True


def epsilon_arc(src, arc):
    return arc.ilabel == EPSILON and arc.olabel == EPSILON


class Wfst:
    """A weighted transducer over a :class:`~sfst.semiring.Semiring`.

    >>> f = Wfst()
    >>> q0, q1 = f.add_state(), f.add_state()
    >>> f.set_start(q0)
    >>> f.add_arc(q0, Arc(1, 1, 0.5, q1))
    0
    >>> f.set_final(q1, 1.0)
    >>> f.num_arcs()
    1
    """

    def __init__(self, semiring=Semiring.PROBABILITY, symbols=None):
        self.semiring = semiring
        self.symbols = dict(symbols) if symbols else None
        self.start: Optional[int] = None
        self.finals: dict[int, float] = {}
        self._arcs: list[list[Arc]] = []
        self._frozen = False

    # -- mutation -----------------------------------------------------------

    def _check_mutable(self):
        if self._frozen:
            raise TypeError("automaton is frozen")

    def _check_state(self, q):
        try:
            ok = 0 <= operator.index(q) < len(self._arcs)
        except TypeError:
            ok = False
        if not ok:
            raise InvalidState(f"state {q!r} out of range [0, {len(self._arcs)})")

    def add_state(self):
        self._check_mutable()
        self._arcs.append([])
        return len(self._arcs) - 1

    def add_states(self, n):
        first = len(self._arcs)
        for _ in range(n):
            self.add_state()
        return range(first, first + n)

    def add_arc(self, src, arc):
        """Append ``arc`` to the arc list of ``src``; return its index there."""
        self._check_mutable()
        self._check_state(src)
        self._check_state(arc.target)
        arc = Arc(int(arc.ilabel), int(arc.olabel), check_weight(arc.weight), arc.target)
        if arc.ilabel < 0 or arc.olabel < 0:
            raise ValueError("labels must be nonnegative")
        self._arcs[src].append(arc)
        return len(self._arcs[src]) - 1

    def delete_arc(self, src, index):
        self._check_mutable()
        self._check_state(src)
        arcs = self._arcs[src]
        if not 0 <= index < len(arcs):
            raise InvalidState(f"state {src} has no arc {index}")
        del arcs[index]

    def set_arcs(self, src, arcs):
        """Replace the whole arc list of ``src``."""
        self._check_mutable()
        self._check_state(src)
        self._arcs[src] = []
        for arc in arcs:
            self.add_arc(src, arc)

    def set_start(self, q):
        self._check_mutable()
        self._check_state(q)
        self.start = q

    def set_final(self, q, weight=1.0):
        self._check_mutable()
        self._check_state(q)
        weight = check_weight(weight)
        if weight == 0.0:
            self.finals.pop(q, None)
        else:
            self.finals[q] = weight

    def freeze(self):
        """Make the automaton read-only; safe to share across threads afterwards."""
        self._frozen = True
        return self

    @property
    def frozen(self):
        return self._frozen

    # -- access -------------------------------------------------------------

    def num_states(self):
        return len(self._arcs)

    def states(self):
        return range(len(self._arcs))

    def arcs(self, q):
        self._check_state(q)
        return tuple(self._arcs[q])

    def num_arcs(self, q=None):
        if q is None:
            return sum(len(a) for a in self._arcs)
        self._check_state(q)
        return len(self._arcs[q])

    def final(self, q):
        return self.finals.get(q, 0.0)

    def is_final(self, q):
        return self.finals.get(q, 0.0) > 0.0

    def is_empty(self):
        return self.start is None

    def iter_arcs(self):
        """Yield ``(src, arc)`` for every arc."""
        for src, arcs in enumerate(self._arcs):
            for arc in arcs:
                yield src, arc

    def copy(self):
        other = Wfst(self.semiring, self.symbols)
        other.start = self.start
        other.finals = dict(self.finals)
        other._arcs = [list(a) for a in self._arcs]
        return other

    def is_acceptor(self):
        return all(a.ilabel == a.olabel for _, a in self.iter_arcs())

    def __repr__(self):
        return (
            f"<Wfst {self.num_states()} states, {self.num_arcs()} arcs, "
            f"start={self.start}, {len(self.finals)} finals>"
        )

    def __eq__(self, other):
        if not isinstance(other, Wfst):
            return NotImplemented
        return (
            self.start == other.start
            and self.finals == other.finals
            and self._arcs == other._arcs
        )

    __hash__ = None


@dataclass
class Path:
    """A sequence of consecutive arcs, each recorded with its source state."""

    start: int
    arcs: list = field(default_factory=list)

    def __post_init__(self):
        q = self.start
        for src, arc in self.arcs:
            if src != q:
                raise ValueError(f"arc from {src} does not continue path at {q}")
            q = arc.target

    @property
    def end(self):
        return self.arcs[-1][1].target if self.arcs else self.start

    def __len__(self):
        return len(self.arcs)

    @property
    def ilabels(self):
        return tuple(arc.ilabel for _, arc in self.arcs)

    @property
    def olabels(self):
        return tuple(arc.olabel for _, arc in self.arcs)

    def istr(self):
        return tuple(x for x in self.ilabels if x != EPSILON)

    def ostr(self):
        return tuple(x for x in self.olabels if x != EPSILON)

    def arc_weight(self):
        return math.prod(arc.weight for _, arc in self.arcs)


def path_weight(fst, path):
    """Product of arc weights times the final weight of the last state."""
    return path.arc_weight() * fst.final(path.end)


# -- strongly connected components ----------------------------------------


def _tarjan(n, successors):
    """Iterative Tarjan.  Components are returned in completion order,
    which is a reverse topological order of the condensation."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    components = []
    counter = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        work = [(root, iter(successors(root)))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                if low[v] < low[parent]:
                    low[parent] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(comp)
    return components


def scc_components(fst, arc_filter=any_arc):
    """Strongly connected components of the filtered arc graph, sinks first."""

    def successors(q):
        return [a.target for a in fst._arcs[q] if arc_filter(q, a)]

    return _tarjan(fst.num_states(), successors)


def scc(fst, arc_filter=any_arc):
    """Map each state to its component id in the subgraph of accepted arcs.

    Ids are dense from 0 and follow Tarjan completion order.
    """
    comp_of = [0] * fst.num_states()
    for cid, comp in enumerate(scc_components(fst, arc_filter)):
        for q in comp:
            comp_of[q] = cid
    return comp_of


def epsilon_scc_arc_filter(scc_map, component):
    """Predicate accepting epsilon arcs whose endpoints both lie in ``component``."""

    def accept(src, arc):
        return (
            arc.ilabel == EPSILON
            and arc.olabel == EPSILON
            and scc_map[src] == component
            and scc_map[arc.target] == component
        )

    return accept


def is_epsilon_acyclic(fst):
    """True iff the subgraph of epsilon:epsilon arcs has no cycle."""
    for comp in scc_components(fst, epsilon_arc):
        if len(comp) > 1:
            return False
        q = comp[0]
        if any(a.target == q and a.is_epsilon() for a in fst._arcs[q]):
            return False
    return True


# -- trimming ---------------------------------------------------------------


def _reach(n, starts, successors):
    seen = [False] * n
    todo = list(starts)
    for q in todo:
        seen[q] = True
    while todo:
        q = todo.pop()
        for r in successors(q):
            if not seen[r]:
                seen[r] = True
                todo.append(r)
    return seen


def connect(fst):
    """Return a copy keeping only states that are accessible and coaccessible.

    Surviving states keep their relative order.  If the start state cannot
    reach a final state the result is the empty automaton.
    """
    n = fst.num_states()
    out = Wfst(fst.semiring, fst.symbols)
    if fst.start is None:
        return out
    acc = _reach(n, [fst.start], lambda q: (a.target for a in fst._arcs[q]))
    preds = [[] for _ in range(n)]
    for src, arc in fst.iter_arcs():
        preds[arc.target].append(src)
    coacc = _reach(n, [q for q, w in fst.finals.items() if w > 0], preds.__getitem__)
    keep = [acc[q] and coacc[q] for q in range(n)]
    if not keep[fst.start]:
        return out
    new_id = {}
    for q in range(n):
        if keep[q]:
            new_id[q] = out.add_state()
    for q, nq in new_id.items():
        out._arcs[nq] = [
            arc._replace(target=new_id[arc.target])
            for arc in fst._arcs[q]
            if keep[arc.target]
        ]
        if q in fst.finals:
            out.finals[nq] = fst.finals[q]
    out.start = new_id[fst.start]
    return out


# -- text format ------------------------------------------------------------


def _parse_int(token, lineno, what):
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"bad {what} {token!r}", lineno) from None
    if value < 0:
        raise ParseError(f"negative {what} {token!r}", lineno)
    return value


def _parse_weight(token, lineno):
    try:
        return check_weight(token)
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None


def read_text(data, symbols=None):
    """Parse the AT&T-style text format (``bytes`` or ``str``).

    Records, one per line:

    * ``src dst ilabel olabel weight`` (arc)
    * ``src dst label weight`` (acceptor arc, ilabel = olabel)
    * ``state weight`` or ``state`` (final state; weight defaults to 1)

    The source state of the first record is the start state.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    arcs = []
    finals = []
    start = None
    max_state = -1
    for lineno, line in enumerate(data.splitlines(), 1):
        fields = line.split()
        if not fields:
            continue
        src = _parse_int(fields[0], lineno, "state")
        if len(fields) == 5:
            dst = _parse_int(fields[1], lineno, "state")
            il = _parse_int(fields[2], lineno, "label")
            ol = _parse_int(fields[3], lineno, "label")
            arcs.append((src, Arc(il, ol, _parse_weight(fields[4], lineno), dst)))
        elif len(fields) == 4:
            dst = _parse_int(fields[1], lineno, "state")
            lab = _parse_int(fields[2], lineno, "label")
            arcs.append((src, Arc(lab, lab, _parse_weight(fields[3], lineno), dst)))
        elif len(fields) in (1, 2):
            w = _parse_weight(fields[1], lineno) if len(fields) == 2 else 1.0
            finals.append((src, w))
            dst = src
        else:
            raise ParseError(f"expected 1, 2, 4 or 5 fields, got {len(fields)}", lineno)
        if start is None:
            start = src
        max_state = max(max_state, src, dst)
    fst = Wfst(symbols=symbols)
    fst.add_states(max_state + 1)
    if start is not None:
        fst.set_start(start)
    for src, arc in arcs:
        fst.add_arc(src, arc)
    for q, w in finals:
        fst.set_final(q, w)
    return fst


def write_text(fst):
    """Serialize ``fst`` to canonical text (start state's records first)."""
    out = io.StringIO()
    if fst.start is None:
        return b""
    order = [fst.start] + [q for q in fst.states() if q != fst.start]
    for q in order:
        for arc in fst._arcs[q]:
            out.write(f"{q} {arc.target} {arc.ilabel} {arc.olabel} {arc.weight!r}\n")
        if q in fst.finals:
            out.write(f"{q} {fst.finals[q]!r}\n")
        elif q == fst.start and not fst._arcs[q]:
            out.write(f"{q} 0.0\n")
    return out.getvalue().encode("utf-8")


def read_symbols(data):
    """Parse a ``name id`` per line symbol table into ``{id: name}``."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    table = {}
    for lineno, line in enumerate(data.splitlines(), 1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 2:
            raise ParseError("expected 'name id'", lineno)
        table[_parse_int(fields[1], lineno, "symbol id")] = fields[0]
    return table


def write_symbols(table):
    return "".join(f"{name} {i}\n" for i, name in sorted(table.items())).encode("utf-8")


def symbol_ids(table, names: Iterable[str]):
    """Translate symbol names to ids; bare integers pass through."""
    inverse = {name: i for i, name in (table or {}).items()}
    ids = []
    for name in names:
        if name in inverse:
            ids.append(inverse[name])
        else:
            try:
                ids.append(int(name))
            except ValueError:
                raise KeyError(f"unknown symbol {name!r}") from None
    return ids
