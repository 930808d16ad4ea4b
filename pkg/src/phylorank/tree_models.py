"""Exact tree and ranking probabilities under the Yule and uniform models.

For a rooted binary tree on ``n`` labelled leaves with interior vertices
``V``, write ``lambda_v`` for the number of interior vertices in the clade
of ``v`` (``v`` included).  Then

* ``P_U[T] = 1 / (2n-3)!!``
* ``P_Y[T] = 2^(n-1) / (n! * prod lambda_v)``
* every ranked tree has Yule probability ``2^(n-1) / (n! (n-1)!)``
* rankings of a fixed tree are uniform: ``P[r | T] = prod lambda_v / (n-1)!``
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .exact_math import catalan, double_factorial_odd, factorial
from .tree_core import PhyloTree, TreeError, lambda_values

__all__ = [
    "ModelProbabilities",
    "PolytomyError",
    "count_rank_functions",
    "count_trees",
    "prob_uniform",
    "prob_yule",
    "prob_ranked_yule",
    "count_ranked_trees",
    "prob_rank_given_tree",
    "bayes_factor",
    "model_probabilities",
    "enumerate_binary_trees",
    "binary_resolutions",
    "resolution_weighted_lambda",
    "polytomy_lambda_estimates",
    "polytomy_lambda_estimate",
    "bayes_factor_with_polytomies",
]

MAX_POLYTOMY_DEGREE = 4


class PolytomyError(TreeError):
    """A vertex has more children than the resolution machinery supports."""


def _require_binary(t: PhyloTree, what: str) -> None:
    if not t.is_binary:
        raise TreeError(f"{what} requires a binary tree")
    if t.n_interior == 0:
        raise TreeError(f"{what} requires at least two leaves")


def count_rank_functions(t: PhyloTree) -> int:
    """Number of rank functions: ``|V|! / prod lambda_v``.

    Valid for any rooted tree, binary or not.
    """
    lam = lambda_values(t)
    return factorial(t.n_interior) // lam.product


def count_trees(n: int) -> int:
    """Number of rooted binary trees on ``n`` labelled leaves."""
    return double_factorial_odd(n)


def prob_uniform(t: PhyloTree) -> Fraction:
    _require_binary(t, "prob_uniform")
    return Fraction(1, double_factorial_odd(t.n_leaves))


def prob_yule(t: PhyloTree) -> Fraction:
    _require_binary(t, "prob_yule")
    n = t.n_leaves
    return Fraction(2 ** (n - 1), factorial(n) * lambda_values(t).product)


def count_ranked_trees(n: int) -> int:
    """Number of ranked rooted binary trees on ``n`` labelled leaves."""
    if n < 2:
        raise ValueError("count_ranked_trees requires n >= 2")
    return factorial(n) * factorial(n - 1) // 2 ** (n - 1)


def prob_ranked_yule(n: int) -> Fraction:
    """Yule probability of any single ranked tree on ``n`` leaves."""
    if n < 2:
        raise ValueError("prob_ranked_yule requires n >= 2")
    return Fraction(2 ** (n - 1), factorial(n) * factorial(n - 1))


def prob_rank_given_tree(t: PhyloTree) -> Fraction:
    """Probability of one particular ranking of ``t`` given its topology."""
    _require_binary(t, "prob_rank_given_tree")
    return Fraction(lambda_values(t).product, factorial(t.n_interior))


def bayes_factor(t: PhyloTree) -> Fraction:
    """``P_Y[T] / P_U[T] = c_{n-1} / prod lambda_v``."""
    _require_binary(t, "bayes_factor")
    return Fraction(catalan(t.n_leaves - 1), lambda_values(t).product)


@dataclass(frozen=True)
class ModelProbabilities:
    p_uniform: Fraction
    p_yule: Fraction
    p_rank_given_tree: Fraction
    p_ranked_yule: Fraction
    bayes_factor_yule_over_uniform: Fraction


def model_probabilities(t: PhyloTree) -> ModelProbabilities:
    """All closed-form model quantities for a binary tree at once."""
    return ModelProbabilities(
        p_uniform=prob_uniform(t),
        p_yule=prob_yule(t),
        p_rank_given_tree=prob_rank_given_tree(t),
        p_ranked_yule=prob_ranked_yule(t.n_leaves),
        bayes_factor_yule_over_uniform=bayes_factor(t),
    )


# --------------------------------------------------------------------------
# enumeration of RB(n)


def enumerate_binary_trees(labels: int | Sequence[str]) -> Iterator[PhyloTree]:
    """Yield every rooted binary tree on the given leaves exactly once.

    Leaves are added in order.  Each new leaf subdivides one of the
    ``2k-2`` existing edges or sits above the current root, which gives
    ``2k-1`` choices and a bijection onto the trees with one more leaf.
    """
    if isinstance(labels, int):
        labels = [str(i) for i in range(1, labels + 1)]
    labels = list(labels)
    n = len(labels)
    if n < 2:
        raise ValueError("need at least two leaves")
    # parent array over vertices: leaves 0..n-1, interior n..2n-2
    def rec(parent: list[int], k: int) -> Iterator[list[int]]:
        if k == n:
            yield parent
            return
        new_leaf = k
        new_int = n + k - 1
        existing = [v for v in range(n + k - 1) if v < k or v >= n]
        for v in existing:
            # subdivide the edge above v; v may be the current root
            p = parent[v]
            child = parent.copy()
            child[new_int] = p
            child[v] = new_int
            child[new_leaf] = new_int
            yield from rec(child, k + 1)

    start = [-1] * (2 * n - 1)
    start[0] = n
    start[1] = n
    for par in rec(start, 2):
        yield _from_parent_array(par, labels)


def _from_parent_array(parent: Sequence[int], labels: Sequence[str]) -> PhyloTree:
    nv = len(parent)
    children: list[list[int]] = [[] for _ in range(nv)]
    root = -1
    for v, p in enumerate(parent):
        if p < 0:
            root = v
        else:
            children[p].append(v)
    labs: list[str | None] = [None] * nv
    for i, lab in enumerate(labels):
        labs[i] = lab
    return PhyloTree(children, root, labs)


# --------------------------------------------------------------------------
# polytomies


def _resolution_shapes(kids: Sequence[int]) -> list[list[tuple[int, int]]]:
    """Binary resolutions of one polytomy as lists of (left, right) merges.

    Items are child ids for original children and negative numbers
    ``-1, -2, ...`` for phantom vertices created by earlier merges.  The
    final merge is the polytomy vertex itself.
    """
    k = len(kids)
    if k == 3:
        out = []
        for i, j in itertools.combinations(range(3), 2):
            rest = [x for x in range(3) if x not in (i, j)][0]
            out.append([(kids[i], kids[j]), (-1, kids[rest])])
        return out
    if k == 4:
        out = []
        # balanced: pair {a,b} with {c,d}
        for pair in [(0, 1), (0, 2), (0, 3)]:
            rest = tuple(x for x in range(4) if x not in pair)
            out.append(
                [(kids[pair[0]], kids[pair[1]]), (kids[rest[0]], kids[rest[1]]), (-1, -2)]
            )
        # caterpillar: ((a,b),c),d
        for last in range(4):
            three = [x for x in range(4) if x != last]
            for i, j in itertools.combinations(three, 2):
                mid = [x for x in three if x not in (i, j)][0]
                out.append([(kids[i], kids[j]), (-1, kids[mid]), (-2, kids[last])])
        return out
    raise PolytomyError(f"polytomies of degree {k} are not supported (max {MAX_POLYTOMY_DEGREE})")


def _check_polytomy_degrees(t: PhyloTree) -> list[int]:
    poly = [v for v in t.interior if len(t.children(v)) > 2]
    for v in poly:
        if len(t.children(v)) > MAX_POLYTOMY_DEGREE:
            raise PolytomyError(
                f"vertex {v} has {len(t.children(v))} children; at most {MAX_POLYTOMY_DEGREE} supported"
            )
    return poly


def binary_resolutions(t: PhyloTree) -> Iterator[tuple[PhyloTree, dict[int, int]]]:
    """Every binary resolution of ``t`` (polytomy degree at most 4).

    Original vertex ids are preserved; phantom vertices get ids from
    ``t.n_vertices`` upwards.  Each item is ``(tree, phantom_parent)``
    where ``phantom_parent`` maps each phantom id to its original
    polytomy vertex.
    """
    poly = _check_polytomy_degrees(t)
    options = [_resolution_shapes(t.children(v)) for v in poly]
    base_children = [list(t.children(v)) for v in range(t.n_vertices)]
    labels = [t.label(v) for v in range(t.n_vertices)]
    lengths = [t.length(v) for v in range(t.n_vertices)] if t._lengths is not None else None
    for choice in itertools.product(*options):
        children = [list(c) for c in base_children]
        labs = list(labels)
        lens = list(lengths) if lengths is not None else None
        owner: dict[int, int] = {}
        for v, merges in zip(poly, choice):
            made: list[int] = []
            for step, (a, b) in enumerate(merges):
                a = made[-a - 1] if a < 0 else a
                b = made[-b - 1] if b < 0 else b
                if step == len(merges) - 1:
                    children[v] = [a, b]
                else:
                    pid = len(children)
                    children.append([a, b])
                    labs.append(None)
                    if lens is not None:
                        lens.append(0.0)
                    owner[pid] = v
                    made.append(pid)
        yield PhyloTree(children, t.root, labs, lens), owner


def resolution_weighted_lambda(phantom_lambdas: Sequence[int | Fraction]) -> Fraction:
    """Yule-weighted mean of one phantom ``lambda`` across equally shaped alternatives.

    Resolution ``i`` has Yule weight proportional to ``1 / lambda_i`` when
    it differs from the others only in that phantom value, so the weighted
    mean is ``k / sum(1 / lambda_i)``.
    """
    if not phantom_lambdas:
        raise ValueError("need at least one value")
    vals = [Fraction(x) for x in phantom_lambdas]
    return Fraction(len(vals)) / sum(1 / x for x in vals)


def polytomy_lambda_estimates(t: PhyloTree, v: int) -> list[Fraction]:
    """Estimated ``lambda`` values of the phantom vertices resolving ``v``.

    Each binary resolution of the clade below ``v`` is weighted by its Yule
    probability.  Vertices outside the phantoms keep the same ``lambda``
    in every resolution, so the weight reduces to ``1 / prod(phantom lambda)``.
    Within each resolution the phantom values are sorted in descending
    order and the weighted mean is taken position by position.

    Returns
    -------
    list of Fraction
        One value per phantom vertex (``degree - 2`` of them), largest first.
    """
    kids = t.children(v)
    if len(kids) < 3:
        raise PolytomyError(f"vertex {v} is not a polytomy")
    # lambda below each child after resolving any polytomies inside it
    sub = {c: max(t.leaf_counts[c] - 1, 0) for c in kids}
    weights: list[Fraction] = []
    values: list[list[int]] = []
    for merges in _resolution_shapes(list(kids)):
        lam_made: list[int] = []
        for a, b in merges[:-1]:
            la = lam_made[-a - 1] if a < 0 else sub[a]
            lb = lam_made[-b - 1] if b < 0 else sub[b]
            lam_made.append(1 + la + lb)
        weights.append(Fraction(1, math.prod(lam_made)))
        values.append(sorted(lam_made, reverse=True))
    total = sum(weights)
    return [sum(w * vals[i] for w, vals in zip(weights, values)) / total for i in range(len(values[0]))]


def polytomy_lambda_estimate(t: PhyloTree, v: int) -> Fraction:
    """The largest phantom ``lambda`` estimate for polytomy ``v``.

    For three children this equals ``3 / sum(1/lambda_i)`` over the three
    possible cherry-parent values; for four leaf children it is ``5/3``.
    """
    return polytomy_lambda_estimates(t, v)[0]


def bayes_factor_with_polytomies(t: PhyloTree) -> Fraction:
    """Approximate ``P_Y / P_U`` for a tree with polytomies.

    Original interior vertices use their resolved ``lambda`` (leaf count
    minus one) and every phantom vertex uses its estimated value.
    """
    _check_polytomy_degrees(t)
    denom = Fraction(1)
    for v in t.interior:
        denom *= t.leaf_counts[v] - 1
        if len(t.children(v)) > 2:
            for lam in polytomy_lambda_estimates(t, v):
                denom *= lam
    return Fraction(catalan(t.n_leaves - 1)) / denom
