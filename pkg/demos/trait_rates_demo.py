"""Simulate a character on a Yule tree and summarise gamma-edge statistics.

Run with ``python demos/trait_rates_demo.py``.
"""

import numpy as np

from phylorank.simulate import replicate_rng, sample_states, sample_yule_continuous
from phylorank.trait_rates import GAMMA_NAMES, RateParams, log_likelihood, psi_statistics

if __name__ == "__main__":
    rng = replicate_rng(2026, 0)
    tree = sample_yule_continuous(40, rng)
    rates = RateParams(r_alpha=0.4, r_beta=0.8)
    states, hidden = sample_states(tree, rates, rng)
    print(f"{tree.n_leaves} leaves, {sum(s == 'alpha' for s in states.values())} in state alpha")
    print(f"log-likelihood {log_likelihood(tree, states, rates):.4f}")
    stats = psi_statistics(tree, states, rates)
    edges = [v for v in range(tree.n_vertices) if v != tree.root]
    truth = np.zeros(4)
    for v in edges:
        truth[2 * hidden[tree.parent(v)] + hidden[v]] += 1
    print(f"{'gamma':>12} {'E[count]':>9} {'true':>5} {'Psi':>8}")
    for g, name in enumerate(GAMMA_NAMES):
        psi = stats.psi[g]
        shown = "undef" if psi is None else f"{psi:.4f}"
        print(f"{name:>12} {stats.denominators[g]:>9.3f} {int(truth[g]):>5} {shown:>8}")
