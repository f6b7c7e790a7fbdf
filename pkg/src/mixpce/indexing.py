"""Multi-index enumeration in graded lexicographic order.

Within one total degree, exponent vectors are compared left to right with the
larger leading exponent first, so for ``d=2`` the order is
``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...``. Every other module relies on
this single convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import CapacityError, ValidationError

# Hard cap on the number of multi-indices materialized at once.
MAX_INDICES = 2_000_000


def _compositions(total, d):
    """Yield all length-``d`` nonnegative vectors summing to ``total``,
    largest first coordinate first."""
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, d - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class MultiIndexSet:
    """All multi-indices of total order ``<= p`` in ``d`` variables."""

    d: int
    p: int
    indices: tuple
    _position: dict = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.indices)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __getitem__(self, i):
        return self.indices[i]

    def position(self, alpha) -> int:
        """Graded-lex position of ``alpha``; KeyError if absent."""
        return self._position[tuple(alpha)]

    def __contains__(self, alpha):
        return tuple(alpha) in self._position

    def as_array(self) -> np.ndarray:
        """``(n, d)`` int64 array of exponents."""
        return np.array(self.indices, dtype=np.int64).reshape(self.n, self.d)

    def orders(self) -> np.ndarray:
        return self.as_array().sum(axis=1)


def count(d: int, p: int) -> int:
    """Number of monomials of total order ``<= p`` in ``d`` variables."""
    return comb(d + p, d)


def enumerate_indices(d: int, p: int) -> MultiIndexSet:
    """Enumerate every multi-index with ``|alpha| <= p`` in graded-lex order.

    Raises
    ------
    ValidationError
        If ``d < 1`` or ``p < 0``.
    CapacityError
        If the set would exceed :data:`MAX_INDICES` entries.
    """
    if d < 1 or p < 0:
        raise ValidationError(f"need d >= 1 and p >= 0, got d={d}, p={p}")
    n = count(d, p)
    if n > MAX_INDICES:
        raise CapacityError(
            f"C({d}+{p}, {d}) = {n} multi-indices exceeds the limit of {MAX_INDICES}"
        )
    indices = tuple(a for total in range(p + 1) for a in _compositions(total, d))
    return MultiIndexSet(d, p, indices, {a: i for i, a in enumerate(indices)})


def graded_lex_key(alpha):
    """Sort key realizing the graded-lex order used by :func:`enumerate_indices`."""
    return (sum(alpha), tuple(-a for a in alpha))


def split(alpha):
    """Split ``alpha`` into two halves whose sum is ``alpha``.

    Coordinates are visited left to right, moving ``ceil(a_k / 2)`` units to
    the first half (capped so that it never overshoots) until the first half
    has order ``ceil(|alpha| / 2)``. The second half gets the remainder, so
    its order is ``floor(|alpha| / 2)``.
    """
    alpha = tuple(int(a) for a in alpha)
    total = sum(alpha)
    if total <= 1:
        raise ValidationError(f"split needs |alpha| > 1, got {alpha}")
    target = (total + 1) // 2
    first = []
    taken = 0
    for a in alpha:
        move = min((a + 1) // 2, target - taken)
        first.append(move)
        taken += move
    second = tuple(a - b for a, b in zip(alpha, first))
    return tuple(first), second


def _ipow(x, k):
    # exponentiation by squaring
    result = 1.0
    base = x
    while k:
        if k & 1:
            result *= base
        base *= base
        k >>= 1
    return result


def monomial_eval(alpha, point) -> float:
    """Evaluate ``prod_k point[k] ** alpha[k]``."""
    if len(alpha) != len(point):
        raise ValidationError(
            f"multi-index has length {len(alpha)} but point has length {len(point)}"
        )
    value = 1.0
    for a, x in zip(alpha, point):
        if a:
            value *= _ipow(float(x), int(a))
    return value
