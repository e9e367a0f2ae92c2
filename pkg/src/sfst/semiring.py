"""Weight algebras over the nonnegative reals.

Two semirings are supported, both on plain ``float`` values:

* ``PROBABILITY``: (R>=0, +, *, 0, 1), used for measures and totals.
* ``MAX_TIMES``: (R>=0, max, *, 0, 1), the Viterbi semiring used for
  best-path queries.
"""

import enum
import math

from sfst.errors import DivergentClosure

SINGULARITY_TOLERANCE = 1e-12


class Semiring(enum.Enum):
    PROBABILITY = "probability"
    MAX_TIMES = "max_times"

    @property
    def zero(self):
        return 0.0

    @property
    def one(self):
        return 1.0

    def plus(self, a, b):
        if self is Semiring.MAX_TIMES:
            return a if a >= b else b
        return a + b

    def times(self, a, b):
        return a * b

    def sum(self, values):
        if self is Semiring.MAX_TIMES:
            return max(values, default=0.0)
        return math.fsum(values)


def check_weight(value):
    """Return ``value`` as a float, raising ``ValueError`` unless finite and >= 0."""
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"weight must be finite and nonnegative, got {value!r}")
    return value


def star(a, tolerance=SINGULARITY_TOLERANCE):
    """Closure ``a* = 1 + a + a^2 + ... = 1 / (1 - a)`` in the probability semiring.

    Raises :class:`DivergentClosure` when ``a >= 1 - tolerance``.
    """
    if a >= 1.0 - tolerance:
        raise DivergentClosure(f"closure of weight {float(a)!r} diverges")
    return 1.0 / (1.0 - a)
