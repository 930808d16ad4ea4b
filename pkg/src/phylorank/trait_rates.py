"""Two-state Markov trait evolution on a tree with edge lengths.

States are ``alpha`` (index 0) and ``beta`` (index 1).  ``alpha`` turns
into ``beta`` at rate ``r_alpha`` and back at rate ``r_beta``.  The root
state is drawn from the stationary law.  Each edge then evolves
independently for its length.

The main output is, for each ordered state pair ``gamma = (a, b)``, the
ratio

    Psi_gamma = sum_e l(e) P[e is a gamma-edge | chi] / sum_e P[e is a gamma-edge | chi]

where an edge is a ``gamma``-edge when its parent end is in state ``a``
and its child end in state ``b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .tree_core import ALPHA, BETA, PhyloTree, StatesError, TreeError

__all__ = [
    "STATES",
    "GAMMAS",
    "GAMMA_NAMES",
    "RateParams",
    "transition_matrix",
    "stationary",
    "ConditionalLikelihoods",
    "conditional_likelihoods",
    "log_likelihood",
    "edge_state_posterior",
    "edge_posteriors",
    "GammaEdgeStats",
    "psi_statistics",
    "state_index",
]

STATES = (ALPHA, BETA)
# ordered (parent, child) state pairs
GAMMAS = ((0, 0), (0, 1), (1, 0), (1, 1))
GAMMA_NAMES = tuple(f"{STATES[a]}-{STATES[b]}" for a, b in GAMMAS)
_RESCALE_BELOW = 1e-300
UNDEFINED_BELOW = 1e-300


@dataclass(frozen=True)
class RateParams:
    """Rates ``r_alpha`` (alpha -> beta) and ``r_beta`` (beta -> alpha)."""

    r_alpha: float
    r_beta: float

    def __post_init__(self) -> None:
        for name in ("r_alpha", "r_beta"):
            x = getattr(self, name)
            if not (isinstance(x, (int, float)) and math.isfinite(x) and x > 0):
                raise ValueError(f"{name} must be positive and finite, got {x!r}")

    @property
    def total(self) -> float:
        return self.r_alpha + self.r_beta

    def rate_matrix(self) -> np.ndarray:
        return np.array([[-self.r_alpha, self.r_alpha], [self.r_beta, -self.r_beta]])

    def scaled(self, c: float) -> "RateParams":
        return RateParams(self.r_alpha * c, self.r_beta * c)


def transition_matrix(rates: RateParams, t: float) -> np.ndarray:
    """Closed-form ``exp(R t)``; rows are the current state, columns the next.

    >>> transition_matrix(RateParams(1.0, 1.0), 0.0)
    array([[1., 0.],
           [0., 1.]])
    """
    if t < 0 or not math.isfinite(t):
        raise ValueError(f"edge length must be finite and non-negative, got {t}")
    ra, rb = rates.r_alpha, rates.r_beta
    s = ra + rb
    # 1 - e^{-st} via expm1 keeps short edges accurate
    q = -math.expm1(-s * t)
    e = 1.0 - q
    return np.array(
        [
            [(rb + ra * e) / s, ra * q / s],
            [rb * q / s, (ra + rb * e) / s],
        ]
    )


def stationary(rates: RateParams) -> np.ndarray:
    """Stationary law ``(r_beta, r_alpha) / (r_alpha + r_beta)``."""
    s = rates.total
    return np.array([rates.r_beta / s, rates.r_alpha / s])


def state_index(state: str) -> int:
    try:
        return STATES.index(state)
    except ValueError:
        raise StatesError(f"unknown state {state!r}; expected 'alpha' or 'beta'") from None


def _validate(t: PhyloTree, states: Mapping[str, str]) -> None:
    if not t.is_binary:
        raise TreeError("trait computations require a binary tree")
    if not t.has_lengths:
        raise TreeError("every edge needs a length")
    missing = [lab for lab in t.leaf_labels if lab not in states]
    if missing:
        shown = ", ".join(sorted(missing)[:5])
        raise StatesError(f"{len(missing)} leaves without a state: {shown}")


@dataclass(frozen=True)
class ConditionalLikelihoods:
    """Scaled conditional likelihoods from the bottom-up pass.

    ``partial[v, eta] * exp(log_scale[v])`` equals
    ``P[states of leaves below v | s(v) = eta]``.
    """

    partial: np.ndarray
    log_scale: np.ndarray

    def likelihood(self, v: int) -> np.ndarray:
        return self.partial[v] * math.exp(self.log_scale[v])


def _transition_cache(t: PhyloTree, rates: RateParams) -> dict[int, np.ndarray]:
    return {v: transition_matrix(rates, t.length(v)) for v in range(t.n_vertices) if v != t.root}  # type: ignore[arg-type]


def conditional_likelihoods(
    t: PhyloTree, states: Mapping[str, str], rates: RateParams, *, _P: dict[int, np.ndarray] | None = None
) -> ConditionalLikelihoods:
    """Bottom-up pruning pass.

    Leaves get indicator vectors.  An interior vertex gets the product over
    its children of ``P(l_c) @ L(c)``.  A vector is rescaled (and its log
    scale recorded) only when its largest entry drops below 1e-300.
    """
    _validate(t, states)
    P = _P if _P is not None else _transition_cache(t, rates)
    nv = t.n_vertices
    partial = np.zeros((nv, 2))
    log_scale = np.zeros(nv)
    for v in t.postorder():
        if t.is_leaf(v):
            partial[v, state_index(states[t.label(v)])] = 1.0  # type: ignore[index]
            continue
        vec = np.ones(2)
        ls = 0.0
        for c in t.children(v):
            vec = vec * (P[c] @ partial[c])
            ls += log_scale[c]
        m = vec.max()
        if 0 < m < _RESCALE_BELOW:
            vec = vec / m
            ls += math.log(m)
        partial[v] = vec
        log_scale[v] = ls
    return ConditionalLikelihoods(partial, log_scale)


def log_likelihood(t: PhyloTree, states: Mapping[str, str], rates: RateParams) -> float:
    """``ln P[chi]`` with the root drawn from the stationary law."""
    cl = conditional_likelihoods(t, states, rates)
    val = float(stationary(rates) @ cl.partial[t.root])
    if val <= 0:
        return -math.inf
    return math.log(val) + float(cl.log_scale[t.root])


def edge_posteriors(t: PhyloTree, states: Mapping[str, str], rates: RateParams) -> dict[int, np.ndarray]:
    """Posterior of the four ordered end-state pairs for every edge.

    Keys are child vertex ids.  Each value is a length-4 array in
    :data:`GAMMAS` order that sums to 1.  An all-zero array means the
    character has probability zero under the model.

    An outside (top-down) pass gives, for each parent ``u`` and child
    ``c``, the joint weight of ``s(u)`` and everything not below ``c``.
    Multiplying by ``p_{ab}(l_c) L_b(c)`` gives the unnormalized joint of
    the edge's end states with the full character.
    """
    _validate(t, states)
    P = _transition_cache(t, rates)
    cl = conditional_likelihoods(t, states, rates, _P=P)
    L = cl.partial
    pi = stationary(rates)
    nv = t.n_vertices
    # up[v, a]: weight of s(v)=a and all leaves outside the clade of v (scaled)
    up = np.zeros((nv, 2))
    up[t.root] = pi
    out: dict[int, np.ndarray] = {}
    for u in t.preorder():
        if t.is_leaf(u):
            continue
        kids = t.children(u)
        msgs = {c: P[c] @ L[c] for c in kids}
        for c in kids:
            outside = up[u].copy()
            for d in kids:
                if d != c:
                    outside = outside * msgs[d]
            joint = outside[:, None] * P[c] * L[c][None, :]
            flat = joint.reshape(4)
            tot = flat.sum()
            out[c] = flat / tot if tot > 0 else np.zeros(4)
            down = outside @ P[c]
            m = down.max()
            up[c] = down / m if m > 0 else down
    return out


def edge_state_posterior(
    t: PhyloTree, states: Mapping[str, str], rates: RateParams, edge: tuple[int, int] | int
) -> np.ndarray:
    """Posterior over ``(s(parent), s(child))`` for one edge, in :data:`GAMMAS` order."""
    v = edge[1] if isinstance(edge, tuple) else edge
    if isinstance(edge, tuple) and t.parent(v) != edge[0]:
        raise TreeError(f"{edge} is not an edge")
    if not 0 <= v < t.n_vertices or v == t.root:
        raise TreeError(f"vertex {v} has no parent edge")
    return edge_posteriors(t, states, rates)[v]


@dataclass(frozen=True)
class GammaEdgeStats:
    """Per-edge posteriors and the four ``Psi`` summaries.

    ``psi[g]`` is ``None`` when the expected number of ``g``-edges is
    (numerically) zero.
    """

    posteriors: dict[int, np.ndarray]
    numerators: tuple[float, float, float, float]
    denominators: tuple[float, float, float, float]
    psi: tuple[float | None, float | None, float | None, float | None]

    def as_dict(self) -> dict[str, float | None]:
        return dict(zip(GAMMA_NAMES, self.psi))


def psi_statistics(t: PhyloTree, states: Mapping[str, str], rates: RateParams) -> GammaEdgeStats:
    """Expected ``gamma``-edge length per expected ``gamma``-edge, pendant edges included."""
    post = edge_posteriors(t, states, rates)
    num = [0.0] * 4
    den = [0.0] * 4
    for v, p in post.items():
        ln = t.length(v)
        for g in range(4):
            num[g] += ln * p[g]  # type: ignore[operator]
            den[g] += p[g]
    psi = tuple(n / d if d > UNDEFINED_BELOW else None for n, d in zip(num, den))
    return GammaEdgeStats(post, tuple(num), tuple(den), psi)  # type: ignore[arg-type]
