"""Exact rank distributions, tree-model probabilities and trait-linked
branch statistics for rooted phylogenetic trees."""

__version__ = "0.1.0"

from .exact_math import binom, catalan, double_factorial_odd, harmonic_partial, log_factorial
from .tree_core import (
    PhyloTree,
    lambda_values,
    mrca,
    parse_newick,
    path_to_root,
    prune_to_leafset,
    read_states,
    subtree_at,
    write_newick,
)
from .tree_models import (
    bayes_factor,
    count_rank_functions,
    count_ranked_trees,
    count_trees,
    polytomy_lambda_estimate,
    prob_rank_given_tree,
    prob_ranked_yule,
    prob_uniform,
    prob_yule,
)
from .rank_inference import RankDistribution, compare, expected_rank, rank_count, rank_prob, rank_prob_gen
from .branch_lengths import expected_depths, expected_edge_length, joint_rank_prob
from .model_selection import kl_uniform_yule, kl_yule_uniform, lr_test, power_bound
from .trait_rates import RateParams, psi_statistics, transition_matrix

__all__ = [
    "binom",
    "catalan",
    "double_factorial_odd",
    "harmonic_partial",
    "log_factorial",
    "PhyloTree",
    "lambda_values",
    "mrca",
    "parse_newick",
    "path_to_root",
    "prune_to_leafset",
    "read_states",
    "subtree_at",
    "write_newick",
    "bayes_factor",
    "count_rank_functions",
    "count_ranked_trees",
    "count_trees",
    "polytomy_lambda_estimate",
    "prob_rank_given_tree",
    "prob_ranked_yule",
    "prob_uniform",
    "prob_yule",
    "RankDistribution",
    "compare",
    "expected_rank",
    "rank_count",
    "rank_prob",
    "rank_prob_gen",
    "expected_depths",
    "expected_edge_length",
    "joint_rank_prob",
    "kl_uniform_yule",
    "kl_yule_uniform",
    "lr_test",
    "power_bound",
    "RateParams",
    "psi_statistics",
    "transition_matrix",
]
