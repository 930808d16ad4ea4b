"""Yule-versus-uniform model selection.

Closed-form entropies of both tree distributions, the two
Kullback-Leibler divergences, the auxiliary series ``S_n`` and ``S'_n``,
the log-likelihood-ratio test, and an analytic lower bound on its power.
All logarithms are natural.  Log-factorials are exact sums of ``ln k``.
"""

from __future__ import annotations

import math
import sys
import threading
from dataclasses import dataclass
from fractions import Fraction

from .exact_math import log_factorial
from .tree_core import PhyloTree, TreeError
from .tree_models import bayes_factor, bayes_factor_with_polytomies

__all__ = [
    "ModelReport",
    "ACCEPT_YULE",
    "REJECT_YULE",
    "entropy_yule",
    "entropy_uniform",
    "kl_yule_uniform",
    "kl_uniform_yule",
    "s_n",
    "s_prime_n",
    "log_catalan",
    "log_double_factorial_odd",
    "power_bound",
    "type2_bound",
    "log_ratio",
    "lr_test",
]

ACCEPT_YULE = "accept-Yule"
REJECT_YULE = "reject-Yule"


def _check_n(n: int) -> None:
    if n < 3:
        raise ValueError(f"n must be at least 3, got {n}")


def log_double_factorial_odd(n: int) -> float:
    """``ln (2n-3)!! = ln (2n-2)! - (n-1) ln 2 - ln (n-1)!``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return log_factorial(2 * n - 2) - (n - 1) * math.log(2) - log_factorial(n - 1)


def log_catalan(m: int) -> float:
    return log_factorial(2 * m) - 2 * log_factorial(m) - math.log(m + 1)


def _g(k: int) -> float:
    return ((1 - k) / k) * math.log((k - 1) / 2) + math.log(k / 2) + math.log(k + 1) - log_factorial(k) / k


def entropy_yule(n: int) -> float:
    """Shannon entropy of the Yule distribution on labelled binary trees."""
    _check_n(n)
    return n * math.fsum(_g(k) / (k + 1) for k in range(2, n))


def entropy_uniform(n: int) -> float:
    """``ln (2n-3)!!``: entropy of the uniform distribution on labelled binary trees."""
    _check_n(n)
    return log_double_factorial_odd(n)


def _difference(a: float, b: float) -> float:
    """``a - b``, reported as exactly 0 when it is below the rounding level of the terms."""
    d = a - b
    if abs(d) <= 8 * sys.float_info.epsilon * max(abs(a), abs(b)):
        return 0.0
    return d


def kl_yule_uniform(n: int) -> float:
    """``KL(P_Y || P_U) = ln (2n-3)!! - J_Y``."""
    return _difference(entropy_uniform(n), entropy_yule(n))


class _LogAProducts:
    """Cumulative ``sum_{j<=m} ln(1 - 1/(2j))``, so ``A(m) = exp(table[m])``."""

    def __init__(self) -> None:
        self._cum = [0.0]
        self._lock = threading.Lock()

    def table(self, m: int) -> list[float]:
        if m < len(self._cum):
            return self._cum
        with self._lock:
            cum = list(self._cum)
            acc = cum[-1]
            for j in range(len(cum), m + 1):
                acc += math.log1p(-1.0 / (2 * j))
                cum.append(acc)
            self._cum = cum
            return cum


_LOGA = _LogAProducts()


def s_n(n: int) -> float:
    """``S_n = sum_{i=2}^{n-1} ln(i)/(i+1) * a_{n,i}``.

    ``a_{n,i} = prod_{j=1}^{n-i-1} (1 - 1/(2j)) / (1 - 1/(2(j+i)))``
    telescopes to ``A(n-i-1) A(i) / A(n-1)`` with
    ``A(m) = prod_{j=1}^{m} (1 - 1/(2j))``.
    """
    _check_n(n)
    la = _LOGA.table(n)
    return math.fsum(
        math.log(i) / (i + 1) * math.exp(la[n - i - 1] + la[i] - la[n - 1]) for i in range(2, n)
    )


def s_prime_n(n: int) -> float:
    """``S'_n = sum_{i=2}^{n-1} ln(i)/(i+1) * A(i)``: a lower bound for ``S_n``."""
    _check_n(n)
    la = _LOGA.table(n)
    return math.fsum(math.log(i) / (i + 1) * math.exp(la[i]) for i in range(2, n))


def kl_uniform_yule(n: int) -> float:
    """``KL(P_U || P_Y) = n S_n - ln c_{n-1}``."""
    return _difference(n * s_n(n), log_catalan(n - 1))


def type2_bound(n: int) -> float:
    """Upper bound on the probability of accepting Yule when trees are uniform."""
    _check_n(n)
    gap = n * s_n(n) - log_catalan(n - 1)
    return math.exp(-(gap * gap) / (2 * n * math.log(n) ** 2))


def power_bound(n: int) -> float:
    """Lower bound on the power of the test against the uniform model."""
    return 1.0 - type2_bound(n)


def log_ratio(bf: Fraction) -> float:
    """Natural log of an exact positive rational without float overflow."""
    if bf <= 0:
        raise ValueError("ratio must be positive")
    return math.log(bf.numerator) - math.log(bf.denominator)


@dataclass(frozen=True)
class ModelReport:
    """Outcome of the Yule-versus-uniform likelihood-ratio test for one tree."""

    n: int
    log_lr: float
    decision: str
    bayes_factor: Fraction
    power_bound: float | None
    kl_yu: float | None
    kl_uy: float | None
    approximate: bool = False

    @property
    def accepts_yule(self) -> bool:
        return self.decision == ACCEPT_YULE


def lr_test(t: PhyloTree, *, resolve_polytomies: bool = False) -> ModelReport:
    """Accept Yule iff ``ln(P_Y[T] / P_U[T]) > 0``; a tie counts as a rejection.

    The decision is taken on the exact Bayes factor, so rounding never
    flips it.  Trees with polytomies need ``resolve_polytomies=True``,
    which substitutes estimated phantom ``lambda`` values.
    """
    if t.is_binary:
        bf = bayes_factor(t)
        approx = False
    elif resolve_polytomies:
        bf = bayes_factor_with_polytomies(t)
        approx = True
    else:
        raise TreeError("lr_test needs a binary tree (or resolve_polytomies=True)")
    n = t.n_leaves
    decision = ACCEPT_YULE if bf > 1 else REJECT_YULE
    if n >= 3:
        pb, kyu, kuy = power_bound(n), kl_yule_uniform(n), kl_uniform_yule(n)
    else:
        pb = kyu = kuy = None
    return ModelReport(
        n=n,
        log_lr=log_ratio(bf),
        decision=decision,
        bayes_factor=bf,
        power_bound=pb,
        kl_yu=kyu,
        kl_uy=kuy,
        approximate=approx,
    )
