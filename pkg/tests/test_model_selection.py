import math

import pytest

from phylorank.exact_math import catalan
from phylorank.model_selection import (
    ACCEPT_YULE,
    REJECT_YULE,
    entropy_uniform,
    entropy_yule,
    kl_uniform_yule,
    kl_yule_uniform,
    log_catalan,
    log_double_factorial_odd,
    lr_test,
    power_bound,
    s_n,
    s_prime_n,
    type2_bound,
)
from phylorank.simulate import replicate_rng, sample_uniform, sample_yule_ranked
from phylorank.tree_core import TreeError, parse_newick
from phylorank.tree_models import enumerate_binary_trees, prob_uniform, prob_yule


def _enumerated(n):
    trees = list(enumerate_binary_trees(n))
    py = [float(prob_yule(t)) for t in trees]
    pu = [float(prob_uniform(t)) for t in trees]
    return py, pu


def _balanced(depth, counter=None):
    counter = counter if counter is not None else [0]
    if depth == 0:
        counter[0] += 1
        return f"x{counter[0]}"
    return f"({_balanced(depth - 1, counter)},{_balanced(depth - 1, counter)})"


class TestEntropy:
    def test_n3(self):
        assert entropy_uniform(3) == pytest.approx(math.log(3), abs=1e-14)
        assert entropy_yule(3) == pytest.approx(math.log(3), abs=1e-14)

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_against_enumeration(self, n):
        py, pu = _enumerated(n)
        assert entropy_uniform(n) == pytest.approx(-math.fsum(p * math.log(p) for p in pu), abs=1e-10)
        assert entropy_yule(n) == pytest.approx(-math.fsum(p * math.log(p) for p in py), abs=1e-10)

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            entropy_yule(2)


class TestKL:
    def test_n3_zero(self):
        assert kl_yule_uniform(3) == 0.0
        assert kl_uniform_yule(3) == 0.0

    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_against_enumeration(self, n):
        py, pu = _enumerated(n)
        kyu = math.fsum(p * math.log(p / q) for p, q in zip(py, pu))
        kuy = math.fsum(q * math.log(q / p) for p, q in zip(py, pu))
        assert kl_yule_uniform(n) == pytest.approx(kyu, abs=1e-10)
        assert kl_uniform_yule(n) == pytest.approx(kuy, abs=1e-10)

    def test_monotone(self):
        vals = [kl_yule_uniform(n) for n in range(4, 51)]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("n", [3, 10, 100, 1000])
    def test_non_negative(self, n):
        assert kl_yule_uniform(n) >= 0
        assert kl_uniform_yule(n) >= 0


class TestSeries:
    def test_s3(self):
        assert s_n(3) == pytest.approx(math.log(2) / 3, abs=1e-15)

    def test_s_prime_200(self):
        assert s_prime_n(200) == pytest.approx(1.44, abs=0.01)

    def test_s_dominates(self):
        assert all(s_n(n) > s_prime_n(n) for n in range(3, 301))

    @pytest.mark.parametrize("n", [3, 7, 20, 60])
    def test_s_direct_products(self, n):
        direct = math.fsum(
            math.log(i)
            / (i + 1)
            * math.prod((1 - 1 / (2 * j)) / (1 - 1 / (2 * (j + i))) for j in range(1, n - i))
            for i in range(2, n)
        )
        assert s_n(n) == pytest.approx(direct, rel=1e-12)

    @pytest.mark.parametrize("n", [2, 5, 30, 300])
    def test_log_helpers(self, n):
        assert log_double_factorial_odd(n) == pytest.approx(math.log(math.prod(range(1, 2 * n - 2, 2))), rel=1e-12)
        assert log_catalan(n) == pytest.approx(math.log(catalan(n)), rel=1e-12)


class TestPower:
    def test_crossing(self):
        first = next(n for n in range(3, 2000) if power_bound(n) > 0.85)
        assert 550 <= first <= 700

    def test_monotone(self):
        vals = [power_bound(n) for n in range(100, 2001)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("n", [3, 4, 50, 600, 5000])
    def test_range(self, n):
        assert 0 <= power_bound(n) < 1
        assert power_bound(n) + type2_bound(n) == pytest.approx(1.0)


class TestLRTest:
    def test_n3_rejects(self):
        rep = lr_test(parse_newick("((A,B),C);"))
        assert rep.log_lr == 0.0
        assert rep.decision == REJECT_YULE

    def test_balanced_16_accepts(self):
        rep = lr_test(parse_newick(_balanced(4) + ";"))
        assert rep.n == 16
        assert rep.log_lr > 0
        assert rep.decision == ACCEPT_YULE

    def test_caterpillar_16_rejects(self):
        s = "x1"
        for k in range(2, 17):
            s = f"({s},x{k})"
        rep = lr_test(parse_newick(s + ";"))
        assert rep.log_lr == pytest.approx(math.log(catalan(15)) - math.lgamma(16), rel=1e-12)
        assert rep.decision == REJECT_YULE

    def test_polytomy_needs_flag(self):
        t = parse_newick("((A,B,C),(D,E));")
        with pytest.raises(TreeError):
            lr_test(t)
        rep = lr_test(t, resolve_polytomies=True)
        assert rep.approximate

    def test_report_fields(self, eleven_leaf):
        rep = lr_test(eleven_leaf)
        assert rep.log_lr == pytest.approx(math.log(13.9967), abs=1e-4)
        assert rep.accepts_yule
        assert rep.kl_yu == kl_yule_uniform(11)
        assert rep.power_bound == power_bound(11)


@pytest.mark.slow
class TestCalibration:
    REPS = 2000
    N = 100

    def test_type_one(self):
        rejected = sum(
            not lr_test(sample_yule_ranked(self.N, replicate_rng(7, i))[0]).accepts_yule for i in range(self.REPS)
        )
        assert rejected / self.REPS < 0.2

    def test_type_two(self):
        accepted = sum(lr_test(sample_uniform(self.N, replicate_rng(8, i))).accepts_yule for i in range(self.REPS))
        bound = type2_bound(self.N)
        se = math.sqrt(max(bound * (1 - bound), 1e-12) / self.REPS)
        assert accepted / self.REPS < bound + 3 * se
