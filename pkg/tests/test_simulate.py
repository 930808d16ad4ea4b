import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from phylorank.simulate import (
    SimConfig,
    replicate_rng,
    sample_coalescent,
    sample_states,
    sample_uniform,
    sample_yule_continuous,
    sample_yule_ranked,
    simulate,
)
from phylorank.trait_rates import RateParams, stationary, transition_matrix
from phylorank.tree_core import TreeError, is_rank_function, parse_newick, topology_key, write_newick
from phylorank.tree_models import count_trees, enumerate_binary_trees, prob_yule


def shape_key(t, v=None):
    """Unlabelled shape of the clade below ``v``."""
    v = t.root if v is None else v
    if t.is_leaf(v):
        return "L"
    return "(" + ",".join(sorted(shape_key(t, c) for c in t.children(v))) + ")"


def within_3se(count, total, p):
    se = math.sqrt(total * p * (1 - p))
    return abs(count - total * p) <= 3 * se


class TestBasics:
    @pytest.mark.parametrize("sampler", [sample_uniform, sample_yule_continuous])
    def test_cherry(self, sampler):
        t = sampler(2, replicate_rng(0, 0))
        assert topology_key(t) == "(1,2);"

    @pytest.mark.parametrize("sampler", [sample_yule_ranked, sample_coalescent])
    def test_cherry_ranked(self, sampler):
        t, r = sampler(2, replicate_rng(0, 0))
        assert topology_key(t) == "(1,2);"
        assert r == {t.root: 1}

    @pytest.mark.parametrize("sampler", [sample_yule_ranked, sample_coalescent])
    @pytest.mark.parametrize("n", [3, 8, 40])
    def test_ranks_are_rank_functions(self, sampler, n):
        t, r = sampler(n, replicate_rng(n, 1))
        assert t.n_leaves == n and t.is_binary
        assert is_rank_function(t, r)

    def test_labels_too_few(self):
        with pytest.raises(ValueError):
            sample_uniform(1, replicate_rng(0, 0))

    def test_yule_continuous_lengths(self):
        t = sample_yule_continuous(30, replicate_rng(5, 0), terminal_offset=0.5)
        assert t.has_lengths
        # every leaf sits at the same time
        tips = []
        for leaf in t.leaves:
            d, w = 0.0, leaf
            while w != t.root:
                d += t.length(w)
                w = t.parent(w)
            tips.append(d)
        assert max(tips) - min(tips) < 1e-12
        assert min(t.length(v) for v in t.leaves) >= 0.5 - 1e-12


class TestDeterminism:
    def test_same_seed_same_output(self):
        cfg = SimConfig("yule-continuous", 12, 99, replicates=30)
        a = [write_newick(r.tree) for r in simulate(cfg)]
        b = [write_newick(r.tree) for r in simulate(cfg)]
        assert a == b

    def test_worker_count_irrelevant(self):
        cfg = SimConfig("coalescent", 9, 4, replicates=40)
        a = [(write_newick(r.tree), sorted(r.ranks.values())) for r in simulate(cfg, workers=1)]
        b = [(write_newick(r.tree), sorted(r.ranks.values())) for r in simulate(cfg, workers=3)]
        assert a == b

    def test_different_seeds_differ(self):
        a = [write_newick(r.tree) for r in simulate(SimConfig("uniform", 15, 1, replicates=5))]
        b = [write_newick(r.tree) for r in simulate(SimConfig("uniform", 15, 2, replicates=5))]
        assert a != b

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"model": "birth-death", "n": 4, "seed": 0},
            {"model": "uniform", "n": 1, "seed": 0},
            {"model": "uniform", "n": 4, "seed": 0, "replicates": 0},
            {"model": "uniform", "n": 4, "seed": 0, "rates": RateParams(1, 1)},
        ],
    )
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            SimConfig(**kwargs)

    def test_states_attached(self):
        cfg = SimConfig("yule-continuous", 6, 3, replicates=2, rates=RateParams(1, 1))
        reps = list(simulate(cfg))
        assert all(set(r.states) == set(r.tree.leaf_labels) for r in reps)


class TestUniformFrequencies:
    def test_n3(self):
        draws = 60_000
        counts = Counter(topology_key(sample_uniform(3, replicate_rng(31, i))) for i in range(draws))
        assert len(counts) == 3
        assert all(within_3se(c, draws, 1 / 3) for c in counts.values())

    @pytest.mark.slow
    def test_n5_chi_square(self):
        draws = 1_050_000
        counts = Counter(topology_key(sample_uniform(5, replicate_rng(51, i))) for i in range(draws))
        assert len(counts) == count_trees(5)
        assert stats.chisquare(list(counts.values())).pvalue > 1e-3


class TestYuleFrequencies:
    def test_shapes_n4(self):
        draws = 60_000
        counts = Counter()
        for i in range(draws):
            t, _ = sample_yule_ranked(4, replicate_rng(41, i))
            balanced = all(t.leaf_counts[c] == 2 for c in t.children(t.root))
            counts[balanced] += 1
        assert within_3se(counts[True], draws, 1 / 3)

    def test_marginal_matches_prob_yule(self):
        draws = 100_000
        counts = Counter(topology_key(sample_yule_ranked(5, replicate_rng(43, i))[0]) for i in range(draws))
        trees = list(enumerate_binary_trees(5))
        observed = [counts[topology_key(t)] for t in trees]
        expected = [draws * float(prob_yule(t)) for t in trees]
        assert sum(observed) == draws
        assert stats.chisquare(observed, expected).pvalue > 1e-3

    def test_coalescent_shapes_n6(self):
        draws = 60_000
        counts = Counter()
        for i in range(draws):
            t, _ = sample_coalescent(6, replicate_rng(61, i))
            counts[shape_key(t)] += 1
        target = Counter()
        for t in enumerate_binary_trees(6):
            target[shape_key(t)] += prob_yule(t)
        assert len(target) == 6
        for shape, p in target.items():
            assert within_3se(counts[shape], draws, float(p))


class TestContinuousTimes:
    def test_first_wait(self):
        draws = 100_000
        waits = np.empty(draws)
        for i in range(draws):
            t = sample_yule_continuous(3, replicate_rng(71, i))
            inner = next(c for c in t.children(t.root) if not t.is_leaf(c))
            waits[i] = t.length(inner)
        se = waits.std(ddof=1) / math.sqrt(draws)
        assert abs(waits.mean() - 0.5) <= 3 * se

    def test_root_to_last_event_n5(self):
        draws = 50_000
        spans = np.empty(draws)
        for i in range(draws):
            t = sample_yule_continuous(5, replicate_rng(72, i))
            leaf = t.leaves[0]
            d, w = 0.0, leaf
            while w != t.root:
                d += t.length(w)
                w = t.parent(w)
            spans[i] = d
        se = spans.std(ddof=1) / math.sqrt(draws)
        assert abs(spans.mean() - (1 / 2 + 1 / 3 + 1 / 4)) <= 3 * se


class TestStates:
    def test_zero_lengths_share_root(self):
        t = parse_newick("((A:0,B:0):0,C:0);")
        for i in range(50):
            _, s = sample_states(t, RateParams(2, 1), replicate_rng(3, i))
            assert len(set(s.tolist())) == 1

    def test_root_frequency(self):
        t = parse_newick("(A:1,B:1);")
        r = RateParams(1.0, 3.0)
        draws = 100_000
        rng = replicate_rng(81, 0)
        beta = sum(int(sample_states(t, r, rng)[1][t.root]) for _ in range(draws))
        assert within_3se(beta, draws, stationary(r)[1])

    def test_single_edge_change(self):
        t = parse_newick("(A:0.7,B:0.0);")
        r = RateParams(0.9, 0.4)
        P = transition_matrix(r, 0.7)
        rng = replicate_rng(82, 0)
        from_alpha = changed = 0
        for _ in range(100_000):
            _, s = sample_states(t, r, rng)
            if s[t.root] == 0:
                from_alpha += 1
                changed += int(s[t.leaf_id("A")] == 1)
        assert within_3se(changed, from_alpha, P[0, 1])

    def test_needs_lengths(self):
        with pytest.raises(TreeError):
            sample_states(parse_newick("(A,B);"), RateParams(1, 1), replicate_rng(0, 0))
