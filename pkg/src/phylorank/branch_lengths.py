"""Expected edge durations under the continuous-time Yule process.

Time is measured so that every lineage splits at rate 1.  Between the
events of rank ``k`` and ``k+1`` there are ``k+1`` lineages, so that wait
has mean ``1/(k+1)``.  An interior edge ``(u, v)`` with ranks
``(i, j)`` therefore has expected duration ``sum_{k=i+1}^{j} 1/k``.
Averaging over the joint law of ``(r(u), r(v))`` under uniform rank
functions gives the unconditional expectation.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

from .exact_math import harmonic_partial
from .rank_inference import rank_prob
from .tree_core import PhyloTree, TreeError, UnknownVertexError, collapse_clade
from .tree_models import binary_resolutions, prob_yule

__all__ = [
    "EdgeEstimate",
    "EdgeLengthReport",
    "joint_rank_prob",
    "expected_edge_length",
    "expected_pendant_length",
    "expected_depths",
    "expected_edge_lengths_weighted",
    "edge_length_report",
    "PENDANT_UNDEFINED",
    "PENDANT_TO_LAST_EVENT",
]

PENDANT_UNDEFINED = "undefined"
PENDANT_TO_LAST_EVENT = "to-last-event"
PendantPolicy = Literal["undefined", "to-last-event"]


def _check_edge(t: PhyloTree, edge: tuple[int, int]) -> tuple[int, int]:
    u, v = edge
    for w in (u, v):
        if not isinstance(w, int) or not 0 <= w < t.n_vertices:
            raise UnknownVertexError(f"vertex id {w!r} not in tree")
    if t.parent(v) != u:
        raise TreeError(f"({u}, {v}) is not an edge with {u} as parent")
    return u, v


def joint_rank_prob(t: PhyloTree, edge: tuple[int, int]) -> dict[tuple[int, int], Fraction]:
    """Joint law of ``(r(u), r(v))`` for an interior edge ``u -> v``.

    With the clade of ``v`` collapsed to a leaf, ``u`` has rank law
    ``P_u`` on the remaining tree.  The ``j - 1`` vertices ranked before
    ``v`` all come from that reduced tree.  The rest of both trees are
    then shuffled, giving weight ``P_u(i) * prod_{k=0}^{|V_v|-2} (|V| - j - k)``
    for ``i < j <= |V_u| + 1``.

    Returns
    -------
    dict
        ``(i, j) -> probability``; pairs with probability zero are omitted.
    """
    if not t.is_binary:
        raise TreeError("joint_rank_prob requires a binary tree")
    u, v = _check_edge(t, edge)
    if t.is_leaf(v):
        raise TreeError(f"vertex {v} is a leaf; pendant edges have no rank pair")
    n_all = t.n_interior
    n_v = t.interior_counts[v]
    tu, idmap = collapse_clade(t, v, with_map=True)
    n_u = tu.n_interior
    pu = rank_prob(tu, idmap[u])
    weights: dict[tuple[int, int], Fraction] = {}
    for j in range(2, n_u + 2):
        shuffle = math.prod(n_all - j - k for k in range(n_v - 1))
        if not shuffle:
            continue
        for i in range(1, j):
            p = pu.prob(i)
            if p:
                weights[(i, j)] = p * shuffle
    total = sum(weights.values())
    return {k: w / total for k, w in weights.items()}


def expected_edge_length(t: PhyloTree, edge: tuple[int, int]) -> float:
    """Expected duration of interior edge ``u -> v``.

    Examples
    --------
    >>> from phylorank.tree_core import parse_newick
    >>> t = parse_newick("((A,B),(C,D));")
    >>> round(expected_edge_length(t, (t.root, t.children(t.root)[0])), 12)
    0.666666666667
    """
    joint = joint_rank_prob(t, edge)
    return math.fsum(float(p) * harmonic_partial(i + 1, j) for (i, j), p in joint.items())


def expected_pendant_length(t: PhyloTree, edge: tuple[int, int], terminal_offset: float = 0.0) -> float:
    """Expected pendant duration from the parent's event to the final event.

    The leaf is taken to end at the last speciation event (rank ``n-1``)
    plus ``terminal_offset``.  No estimator beyond that is implied.
    """
    if not t.is_binary:
        raise TreeError("expected_pendant_length requires a binary tree")
    u, v = _check_edge(t, edge)
    if not t.is_leaf(v):
        raise TreeError(f"vertex {v} is interior; use expected_edge_length")
    last = t.n_interior
    dist = rank_prob(t, u)
    return math.fsum(float(p) * harmonic_partial(i + 1, last) for i, p in enumerate(dist.probs, 1)) + terminal_offset


def expected_depths(t: PhyloTree) -> dict[int, float]:
    """Expected time from the root event to each interior vertex's event.

    A vertex of rank ``j`` sits ``sum_{k=2}^{j} 1/k`` after the root.
    """
    if not t.is_binary:
        raise TreeError("expected_depths requires a binary tree")
    out: dict[int, float] = {}
    for v in t.interior:
        dist = rank_prob(t, v)
        out[v] = math.fsum(float(p) * harmonic_partial(2, j) for j, p in enumerate(dist.probs, 1))
    return out


def _path_length(
    t: PhyloTree,
    u: int,
    v: int,
    pendant_policy: PendantPolicy,
    terminal_offset: float,
) -> float | None:
    total = []
    w = v
    while w != u:
        p = t.parent(w)
        if t.is_leaf(w):
            if pendant_policy != PENDANT_TO_LAST_EVENT:
                return None
            total.append(expected_pendant_length(t, (p, w), terminal_offset))
        else:
            total.append(expected_edge_length(t, (p, w)))
        w = p
    return math.fsum(total)


def expected_edge_lengths_weighted(
    t: PhyloTree,
    edge: tuple[int, int],
    *,
    pendant_policy: PendantPolicy = PENDANT_UNDEFINED,
    terminal_offset: float = 0.0,
) -> float | None:
    """Expected duration of ``u -> v`` averaged over binary resolutions.

    Each resolution is weighted by its Yule probability.  When ``u`` is a
    polytomy, ``v`` may sit several phantom edges below ``u``.  The
    durations along that path are then summed.  Returns ``None`` for a
    pendant edge under the ``"undefined"`` policy.
    """
    u, v = _check_edge(t, edge)
    if t.is_binary:
        if t.is_leaf(v):
            if pendant_policy != PENDANT_TO_LAST_EVENT:
                return None
            return expected_pendant_length(t, edge, terminal_offset)
        return expected_edge_length(t, edge)
    num = 0.0
    den = Fraction(0)
    terms = []
    for res, _owner in binary_resolutions(t):
        e = _path_length(res, u, v, pendant_policy, terminal_offset)
        if e is None:
            return None
        w = prob_yule(res)
        den += w
        terms.append((w, e))
    num = math.fsum(float(w / den) * e for w, e in terms)
    return num


@dataclass(frozen=True)
class EdgeEstimate:
    parent: int
    child: int
    parent_clade: str
    child_clade: str
    expected_length: float | None
    pendant: bool


@dataclass(frozen=True)
class EdgeLengthReport:
    """Per-edge expected durations for a whole tree."""

    edges: tuple[EdgeEstimate, ...]
    pendant_policy: str = PENDANT_UNDEFINED
    terminal_offset: float = 0.0
    metadata: dict = field(default_factory=dict)

    def as_rows(self) -> list[tuple[str, str, float | None]]:
        return [(e.parent_clade, e.child_clade, e.expected_length) for e in self.edges]


def _edge_task(args: tuple[PhyloTree, tuple[int, int], str, float]) -> float | None:
    t, edge, policy, offset = args
    return expected_edge_lengths_weighted(t, edge, pendant_policy=policy, terminal_offset=offset)  # type: ignore[arg-type]


def edge_length_report(
    t: PhyloTree,
    *,
    pendant_policy: PendantPolicy = PENDANT_UNDEFINED,
    terminal_offset: float = 0.0,
    workers: int | None = 1,
) -> EdgeLengthReport:
    """Expected duration of every edge of ``t``.

    Parameters
    ----------
    pendant_policy : {"undefined", "to-last-event"}
        ``"undefined"`` reports pendant edges as ``None``.
        ``"to-last-event"`` measures them up to the final speciation event
        plus ``terminal_offset``.
    workers : int, optional
        Number of worker processes for the per-edge computations.
    """
    if pendant_policy not in (PENDANT_UNDEFINED, PENDANT_TO_LAST_EVENT):
        raise ValueError(f"unknown pendant policy {pendant_policy!r}")
    edges = t.edges()
    jobs = [(t, e, pendant_policy, terminal_offset) for e in edges]
    workers = workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            values = list(pool.map(_edge_task, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        values = [_edge_task(j) for j in jobs]
    rows = tuple(
        EdgeEstimate(u, v, t.clade_key(u), t.clade_key(v), val, t.is_leaf(v))
        for (u, v), val in zip(edges, values)
    )
    return EdgeLengthReport(rows, pendant_policy, terminal_offset)
