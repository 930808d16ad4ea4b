"""Rank distributions of interior vertices under uniformly random rank functions.

A rank function orders the interior vertices ``1..|V|`` so that every
ancestor precedes its descendants.  The dynamic programs here walk the
path from a vertex ``v`` to the root.  At each step they merge the ranked
clade built so far with the clade hanging off the next path vertex.
Everything is exact: counts are ``int`` and probabilities are
``Fraction``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .exact_math import binom
from .tree_core import (
    PhyloTree,
    RankFunction,
    TreeError,
    UnknownVertexError,
    mrca,
    path_to_root,
    subtree_at,
)
from .tree_models import count_rank_functions

__all__ = [
    "RankDistribution",
    "rank_count",
    "rank_prob",
    "rank_prob_gen",
    "expected_rank",
    "compare",
    "enumerate_rank_functions",
    "rank_oracle",
    "MAX_ENUMERATION_INTERIOR",
]

MAX_ENUMERATION_INTERIOR = 12


@dataclass(frozen=True)
class RankDistribution:
    """Exact distribution of ``r(v)`` over ranks ``1..len(probs)``.

    ``probs[i - 1]`` is ``P[r(v) = i]``.  ``counts`` holds the number of
    rank functions with ``r(v) = i`` when it was computed.
    """

    probs: tuple[Fraction, ...]
    counts: tuple[int, ...] | None = None

    def __len__(self) -> int:
        return len(self.probs)

    def prob(self, i: int) -> Fraction:
        if 1 <= i <= len(self.probs):
            return self.probs[i - 1]
        return Fraction(0)

    def mean(self) -> Fraction:
        return sum((i * p for i, p in enumerate(self.probs, 1)), Fraction(0))

    def variance(self) -> Fraction:
        mu = self.mean()
        return sum((i * i * p for i, p in enumerate(self.probs, 1)), Fraction(0)) - mu * mu

    def cumulative(self) -> list[Fraction]:
        """``P[r(v) <= i]`` for ``i = 1..len``."""
        out, acc = [], Fraction(0)
        for p in self.probs:
            acc += p
            out.append(acc)
        return out

    def support(self) -> tuple[int, int]:
        nz = [i for i, p in enumerate(self.probs, 1) if p]
        return nz[0], nz[-1]


def _require_interior(t: PhyloTree, v: int) -> None:
    if not isinstance(v, int) or not 0 <= v < t.n_vertices:
        raise UnknownVertexError(f"vertex id {v!r} not in tree")
    if t.is_leaf(v):
        raise TreeError(f"vertex {v} is a leaf and has no rank")


def _path_dp(
    t: PhyloTree,
    v: int,
    *,
    general: bool,
    exact_counts: bool,
    counter: Counter | None = None,
) -> list[int]:
    """Core root-path recursion; returns ``alpha[i]`` for ``i = 0..|V|`` (index 0 unused).

    With ``exact_counts`` the entries are the numbers of rank functions
    with ``r(v) = i``.  Otherwise factors that do not depend on ``i`` are
    dropped, so the entries are only proportional to them.

    At each step the clade ``T_m`` of path vertex ``x_m`` is the previous
    clade ``T_{m-1}`` plus ``x_m`` plus ``o`` other interior vertices in
    the side clades of ``x_m``.  If ``v`` has rank ``i - j - 1`` in
    ``T_{m-1}`` and ``j`` of the ``o`` side vertices precede it, then it
    has rank ``i`` in ``T_m``.  The merges before and after ``v`` can be
    interleaved in ``binom(i-2, j) * binom(s + o - i + 1, o - j)`` ways,
    where ``s = |T_{m-1}|``.
    """
    cnt = t.interior_counts
    path = path_to_root(t, v)
    size = cnt[v]
    if exact_counts:
        base = count_rank_functions(subtree_at(t, v))
    else:
        base = 1
    alpha = [0, base] + [0] * (cnt[t.root] - 1)
    for m in range(1, len(path)):
        x = path[m]
        prev = path[m - 1]
        if general:
            other = cnt[x] - cnt[prev] - 1
        else:
            sib = [c for c in t.children(x) if c != prev]
            other = cnt[sib[0]]
        new_size = size + other + 1
        if exact_counts:
            # rankings of the side forest merged as one unit
            side = 1
            placed = 0
            for c in t.children(x):
                if c == prev or not cnt[c]:
                    continue
                side *= count_rank_functions(subtree_at(t, c)) * binom(placed + cnt[c], cnt[c])
                placed += cnt[c]
        else:
            side = 1
        new = [0] * len(alpha)
        # x_m sits at rank 1 of T_m, so v cannot be above rank m
        for i in range(m + 1, new_size + 1):
            acc = 0
            for j in range(0, min(other, i - 2) + 1):
                if counter is not None:
                    counter["inner"] += 1
                a = alpha[i - j - 1]
                if a:
                    acc += a * binom(size + other - (i - 1), other - j) * binom(i - 2, j)
            new[i] = acc * side
        alpha = new
        size = new_size
    return alpha


def _normalize(alpha: Sequence[int], n: int) -> tuple[Fraction, ...]:
    total = sum(alpha[1 : n + 1])
    return tuple(Fraction(a, total) for a in alpha[1 : n + 1])


def rank_count(t: PhyloTree, v: int, *, counter: Counter | None = None) -> list[int]:
    """Number of rank functions of ``t`` with ``r(v) = i``, for ``i = 1..|V|``.

    Parameters
    ----------
    t : PhyloTree
        Binary tree.
    v : int
        Interior vertex.
    counter : collections.Counter, optional
        If given, ``counter["inner"]`` is incremented once per evaluation
        of the innermost convolution term.

    Returns
    -------
    list of int
        ``out[i - 1]`` is the count for rank ``i``.
    """
    if not t.is_binary:
        raise TreeError("rank_count requires a binary tree; use rank_prob_gen")
    _require_interior(t, v)
    alpha = _path_dp(t, v, general=False, exact_counts=True, counter=counter)
    return alpha[1 : t.n_interior + 1]


def rank_prob(t: PhyloTree, v: int, *, counter: Counter | None = None) -> RankDistribution:
    """Exact distribution of the rank of ``v`` in a binary tree.

    Examples
    --------
    >>> from phylorank.tree_core import parse_newick
    >>> t = parse_newick("((A,B),(C,D));")
    >>> [str(p) for p in rank_prob(t, t.children(t.root)[0]).probs]
    ['0', '1/2', '1/2']
    """
    if not t.is_binary:
        raise TreeError("rank_prob requires a binary tree; use rank_prob_gen")
    _require_interior(t, v)
    alpha = _path_dp(t, v, general=False, exact_counts=False, counter=counter)
    return RankDistribution(_normalize(alpha, t.n_interior))


def rank_prob_gen(t: PhyloTree, v: int, *, counter: Counter | None = None) -> RankDistribution:
    """Rank distribution of ``v`` for any rooted tree, polytomies allowed."""
    _require_interior(t, v)
    alpha = _path_dp(t, v, general=True, exact_counts=False, counter=counter)
    return RankDistribution(_normalize(alpha, t.n_interior))


def rank_distribution(t: PhyloTree, v: int) -> RankDistribution:
    """Rank distribution with exact counts, dispatching on whether ``t`` is binary."""
    if t.is_binary:
        counts = tuple(rank_count(t, v))
        return RankDistribution(_normalize((0,) + counts, len(counts)), counts)
    return rank_prob_gen(t, v)


def expected_rank(t: PhyloTree, v: int) -> tuple[Fraction, Fraction]:
    """Exact mean and variance of ``r(v)``."""
    dist = rank_prob(t, v) if t.is_binary else rank_prob_gen(t, v)
    return dist.mean(), dist.variance()


def compare(t: PhyloTree, u: int, v: int) -> Fraction:
    """Probability that ``u`` gets a smaller rank than ``v``.

    Below the most recent common ancestor the two clades containing ``u``
    and ``v`` are ranked independently.  Their orders are then shuffled
    together, and ``u`` precedes ``v`` iff ``u`` falls among the first
    ``j`` vertices of its clade that land before ``v``.
    """
    if not t.is_binary:
        raise TreeError("compare requires a binary tree")
    _require_interior(t, u)
    _require_interior(t, v)
    if u == v:
        raise ValueError("compare needs two distinct vertices")
    top = mrca(t, u, v)
    if top == v:
        return Fraction(0)
    if top == u:
        return Fraction(1)
    child_u = _child_towards(t, top, u)
    child_v = _child_towards(t, top, v)
    tu, map_u = subtree_at(t, child_u, with_map=True)
    tv, map_v = subtree_at(t, child_v, with_map=True)
    du = rank_prob(tu, map_u[u])
    dv = rank_prob(tv, map_v[v])
    nu, nv = tu.n_interior, tv.n_interior
    ucum = du.cumulative()
    acc = Fraction(0)
    for i in range(1, nv + 1):
        pv = dv.prob(i)
        if not pv:
            continue
        for j in range(1, nu + 1):
            acc += pv * binom(i - 1 + j, j) * binom(nv - i + nu - j, nu - j) * ucum[j - 1]
    return acc / binom(nu + nv, nv)


def _child_towards(t: PhyloTree, anc: int, w: int) -> int:
    while t.parent(w) != anc:
        w = t.parent(w)
    return w


def enumerate_rank_functions(t: PhyloTree) -> Iterator[RankFunction]:
    """Yield every rank function of ``t`` (every linear extension of ancestry).

    Raises
    ------
    ValueError
        If the tree has more than 12 interior vertices.
    """
    n = t.n_interior
    if n > MAX_ENUMERATION_INTERIOR:
        raise ValueError(
            f"refusing to enumerate rank functions of {n} interior vertices "
            f"(limit {MAX_ENUMERATION_INTERIOR})"
        )
    if n == 0:
        return
    kids = {w: [c for c in t.children(w) if not t.is_leaf(c)] for w in t.interior}
    ranks: dict[int, int] = {}

    def rec(frontier: list[int], k: int) -> Iterator[RankFunction]:
        if k > n:
            yield dict(ranks)
            return
        for idx, w in enumerate(frontier):
            ranks[w] = k
            nxt = frontier[:idx] + frontier[idx + 1 :] + kids[w]
            yield from rec(nxt, k + 1)
            del ranks[w]

    yield from rec([t.root], 1)


def rank_oracle(t: PhyloTree, v: int) -> RankDistribution:
    """Rank distribution of ``v`` by brute-force enumeration (small trees only)."""
    _require_interior(t, v)
    counts = [0] * t.n_interior
    for r in enumerate_rank_functions(t):
        counts[r[v] - 1] += 1
    total = sum(counts)
    return RankDistribution(tuple(Fraction(c, total) for c in counts), tuple(counts))
