"""Exact combinatorial primitives.

Counts are plain Python ``int`` (unbounded) and ratios are
:class:`fractions.Fraction` (always reduced, positive denominator).
Floating point appears only in :func:`log_factorial` and
:func:`harmonic_partial`.
"""

from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Iterable

BigCount = int
BigRational = Fraction

__all__ = [
    "BigCount",
    "BigRational",
    "binom",
    "binomial_table",
    "double_factorial_odd",
    "catalan",
    "factorial",
    "log_factorial",
    "harmonic_partial",
    "product",
]


class _PascalTable:
    """Row-by-row Pascal triangle that grows on demand.

    Rows are appended under a lock and never mutated afterwards, so
    readers of an already-filled row need no synchronization.
    """

    def __init__(self) -> None:
        self._rows: list[tuple[int, ...]] = [(1,)]
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._rows)

    def _grow(self, n: int) -> None:
        with self._lock:
            rows = self._rows
            while len(rows) <= n:
                prev = rows[-1]
                row = (1,) + tuple(prev[k - 1] + prev[k] for k in range(1, len(prev))) + (1,)
                rows.append(row)

    def get(self, n: int, k: int) -> int:
        if k < 0 or k > n:
            return 0
        if n >= len(self._rows):
            self._grow(n)
        return self._rows[n][k]


_TABLE = _PascalTable()
# rows beyond this size are computed directly instead of memoized
_TABLE_LIMIT = 512


def binomial_table() -> _PascalTable:
    """Return the shared memoized Pascal table."""
    return _TABLE


def binom(n: int, k: int) -> BigCount:
    """Binomial coefficient ``n`` choose ``k``; zero when ``k > n`` or ``k < 0``.

    Examples
    --------
    >>> binom(5, 2)
    10
    >>> binom(7, 9)
    0
    """
    if n < 0:
        raise ValueError(f"binom: n must be non-negative, got {n}")
    if k < 0 or k > n:
        return 0
    if n <= _TABLE_LIMIT:
        return _TABLE.get(n, k)
    return math.comb(n, k)


def factorial(n: int) -> BigCount:
    if n < 0:
        raise ValueError(f"factorial: n must be non-negative, got {n}")
    return math.factorial(n)


def double_factorial_odd(n: int) -> BigCount:
    """Return ``(2n-3)!! = (2n-3)(2n-5)...3*1``.

    This is the number of rooted binary trees on ``n`` labelled leaves.

    Raises
    ------
    ValueError
        If ``n < 2``.
    """
    if n < 2:
        raise ValueError(f"double_factorial_odd requires n >= 2, got {n}")
    out = 1
    for k in range(3, 2 * n - 2, 2):
        out *= k
    return out


def catalan(n: int) -> BigCount:
    """n-th Catalan number ``binom(2n, n) / (n + 1)``."""
    if n < 0:
        raise ValueError(f"catalan: n must be non-negative, got {n}")
    return math.comb(2 * n, n) // (n + 1)


def product(values: Iterable[int]) -> BigCount:
    return math.prod(values)


class _LogFactorialCache:
    """Cumulative sums of ``ln k``, extended on demand."""

    def __init__(self) -> None:
        self._cum: list[float] = [0.0]
        self._lock = threading.Lock()

    def get(self, n: int) -> float:
        cum = self._cum
        if n < len(cum):
            return cum[n]
        with self._lock:
            cum = self._cum
            acc = cum[-1]
            start = len(cum)
            ext = list(cum)
            for k in range(start, n + 1):
                acc += math.log(k)
                ext.append(acc)
            self._cum = ext
            return ext[n]


_LOGFACT = _LogFactorialCache()


def log_factorial(n: int) -> float:
    """Natural log of ``n!`` by summing ``ln k`` (no Stirling approximation)."""
    if n < 0:
        raise ValueError(f"log_factorial: n must be non-negative, got {n}")
    return _LOGFACT.get(n)


def harmonic_partial(a: int, b: int) -> float:
    """Return ``sum_{k=a}^{b} 1/k``; the empty sum (``a > b``) is 0.

    >>> round(harmonic_partial(2, 4), 4)
    1.0833
    """
    if a > b:
        return 0.0
    if a < 1:
        raise ValueError("harmonic_partial requires a >= 1")
    return math.fsum(1.0 / k for k in range(a, b + 1))
