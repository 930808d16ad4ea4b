"""Random tree and character generators.

Every replicate draws from its own Philox stream,
``SeedSequence(seed, spawn_key=(i,))``.  The output therefore depends only
on ``(seed, i)`` and not on how replicates are split across workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .trait_rates import STATES, RateParams, stationary, transition_matrix
from .tree_core import PhyloTree, RankFunction, TreeError

__all__ = [
    "MODELS",
    "SimConfig",
    "Replicate",
    "replicate_rng",
    "sample_yule_ranked",
    "sample_yule_continuous",
    "sample_uniform",
    "sample_coalescent",
    "sample_states",
    "simulate",
]

MODELS = ("yule-ranked", "yule-continuous", "uniform", "coalescent")


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent Philox generator for replicate ``index`` of a seeded batch."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def _labels(n: int, labels: Sequence[str] | None) -> list[str]:
    if n < 2:
        raise ValueError(f"need at least two leaves, got {n}")
    if labels is None:
        return [str(i) for i in range(1, n + 1)]
    if len(labels) != n:
        raise ValueError("need exactly one label per leaf")
    return list(labels)


def _grow_yule(n: int, rng: np.random.Generator) -> tuple[list[list[int]], list[int], list[int]]:
    """Ranked Yule growth: split a uniformly chosen leaf at every step.

    Returns children lists, the rank of each vertex (0 for leaves) and the
    leaf ids in creation order.
    """
    children: list[list[int]] = [[1, 2], [], []]
    rank = [1, 0, 0]
    leaves = [1, 2]
    for k in range(2, n):
        pos = int(rng.integers(len(leaves)))
        v = leaves[pos]
        a, b = len(children), len(children) + 1
        children[v] = [a, b]
        children.extend([[], []])
        rank[v] = k
        rank.extend([0, 0])
        leaves[pos] = a
        leaves.append(b)
    return children, rank, leaves


def _label_leaves(nv: int, leaves: list[int], names: list[str], rng: np.random.Generator) -> list[str | None]:
    labs: list[str | None] = [None] * nv
    perm = rng.permutation(len(names))
    for leaf, k in zip(leaves, perm):
        labs[leaf] = names[int(k)]
    return labs


def sample_yule_ranked(
    n: int, rng: np.random.Generator, labels: Sequence[str] | None = None
) -> tuple[PhyloTree, RankFunction]:
    """Ranked tree from the Yule process; uniform over ranked labelled trees.

    Labels are assigned to the final leaves by a uniform random permutation.
    """
    names = _labels(n, labels)
    children, rank, leaves = _grow_yule(n, rng)
    labs = _label_leaves(len(children), leaves, names, rng)
    tree = PhyloTree(children, 0, labs)
    return tree, {v: rank[v] for v in range(len(children)) if children[v]}


def sample_yule_continuous(
    n: int,
    rng: np.random.Generator,
    labels: Sequence[str] | None = None,
    terminal_offset: float = 0.0,
) -> PhyloTree:
    """Yule tree with edge lengths in units where each lineage splits at rate 1.

    The wait between the events of rank ``k-1`` and ``k`` is exponential
    with mean ``1/k``.  Every leaf ends at the time of the last event plus
    ``terminal_offset``.
    """
    names = _labels(n, labels)
    children, rank, leaves = _grow_yule(n, rng)
    labs = _label_leaves(len(children), leaves, names, rng)
    event_time = [0.0] * n
    for k in range(2, n):
        event_time[k] = event_time[k - 1] + float(rng.exponential(1.0 / k))
    end = event_time[n - 1] + terminal_offset
    nv = len(children)
    vtime = [end if not children[v] else event_time[rank[v]] for v in range(nv)]
    lengths: list[float | None] = [None] * nv
    for v in range(nv):
        for c in children[v]:
            lengths[c] = vtime[c] - vtime[v]
    return PhyloTree(children, 0, labs, lengths)


def sample_uniform(n: int, rng: np.random.Generator, labels: Sequence[str] | None = None) -> PhyloTree:
    """Uniform random rooted binary tree by repeated edge subdivision.

    Leaves are inserted in label order.  Each insertion picks uniformly
    among the edges of the current tree plus the edge above the root.
    """
    names = _labels(n, labels)
    parent = [2, 2, -1]
    labs: list[str | None] = [names[0], names[1], None]
    for k in range(2, n):
        target = int(rng.integers(len(parent)))
        mid = len(parent)
        parent.extend([parent[target], mid])
        parent[target] = mid
        labs.extend([None, names[k]])
    children: list[list[int]] = [[] for _ in parent]
    root = -1
    for v, p in enumerate(parent):
        if p < 0:
            root = v
        else:
            children[p].append(v)
    return PhyloTree(children, root, labs)


def sample_coalescent(
    n: int, rng: np.random.Generator, labels: Sequence[str] | None = None
) -> tuple[PhyloTree, RankFunction]:
    """Ranked tree from the coalescent: merge a uniform pair of lineages each step.

    The first merge gets rank ``n-1`` and the final merge (the root) rank 1.
    """
    names = _labels(n, labels)
    children: list[list[int]] = [[] for _ in range(n)]
    labs: list[str | None] = list(names)
    ranks: RankFunction = {}
    lineages = list(range(n))
    for k in range(n, 1, -1):
        i, j = rng.choice(k, size=2, replace=False)
        i, j = int(i), int(j)
        a, b = lineages[i], lineages[j]
        v = len(children)
        children.append([a, b])
        labs.append(None)
        ranks[v] = k - 1
        for idx in sorted((i, j), reverse=True):
            lineages.pop(idx)
        lineages.append(v)
    return PhyloTree(children, lineages[0], labs), ranks


def sample_states(
    t: PhyloTree, rates: RateParams, rng: np.random.Generator
) -> tuple[dict[str, str], np.ndarray]:
    """Draw a character: root from the stationary law, then down each edge.

    Returns
    -------
    leaf_states : dict
        Leaf label -> ``"alpha"`` or ``"beta"``.
    all_states : ndarray of int
        State index (0 = alpha, 1 = beta) of every vertex, hidden ones included.
    """
    if not t.has_lengths:
        raise TreeError("sample_states needs edge lengths on every edge")
    s = np.zeros(t.n_vertices, dtype=np.int8)
    pi = stationary(rates)
    s[t.root] = 1 if rng.random() < pi[1] else 0
    for v in t.preorder():
        if v == t.root:
            continue
        P = transition_matrix(rates, t.length(v))  # type: ignore[arg-type]
        s[v] = 1 if rng.random() < P[s[t.parent(v)], 1] else 0
    leaf_states = {t.label(v): STATES[s[v]] for v in t.leaves}
    return leaf_states, s  # type: ignore[return-value]


@dataclass(frozen=True)
class SimConfig:
    model: str
    n: int
    seed: int
    replicates: int = 1
    rates: RateParams | None = None
    terminal_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.rates is not None and self.model != "yule-continuous":
            raise ValueError("state simulation needs edge lengths (model 'yule-continuous')")


@dataclass(frozen=True)
class Replicate:
    index: int
    tree: PhyloTree
    ranks: RankFunction | None = None
    states: dict[str, str] | None = None


def _one(config: SimConfig, i: int) -> Replicate:
    rng = replicate_rng(config.seed, i)
    ranks = None
    states = None
    if config.model == "yule-ranked":
        tree, ranks = sample_yule_ranked(config.n, rng)
    elif config.model == "coalescent":
        tree, ranks = sample_coalescent(config.n, rng)
    elif config.model == "uniform":
        tree = sample_uniform(config.n, rng)
    else:
        tree = sample_yule_continuous(config.n, rng, terminal_offset=config.terminal_offset)
        if config.rates is not None:
            states, _ = sample_states(tree, config.rates, rng)
    return Replicate(i, tree, ranks, states)


def _chunk(args: tuple[SimConfig, int, int]) -> list[Replicate]:
    config, lo, hi = args
    return [_one(config, i) for i in range(lo, hi)]


def simulate(config: SimConfig, workers: int | None = 1) -> Iterator[Replicate]:
    """Generate ``config.replicates`` replicates in index order.

    With ``workers > 1`` chunks of replicates run in separate processes.
    The output is identical for any worker count.
    """
    workers = workers or os.cpu_count() or 1
    if workers <= 1 or config.replicates < 2:
        for i in range(config.replicates):
            yield _one(config, i)
        return
    size = max(1, config.replicates // (4 * workers))
    jobs = [(config, lo, min(lo + size, config.replicates)) for lo in range(0, config.replicates, size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for batch in pool.map(_chunk, jobs):
            yield from batch
