import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import binary_trees_up_to, cached_rank_table, edge_length_oracle, harmonic
from phylorank.branch_lengths import (
    PENDANT_TO_LAST_EVENT,
    PENDANT_UNDEFINED,
    edge_length_report,
    expected_depths,
    expected_edge_length,
    expected_edge_lengths_weighted,
    expected_pendant_length,
    joint_rank_prob,
)
from phylorank.rank_inference import enumerate_rank_functions
from phylorank.simulate import replicate_rng, sample_uniform
from phylorank.tree_core import TreeError, parse_newick, write_newick
from phylorank.tree_models import PolytomyError, binary_resolutions, prob_yule

SMALL_BINARY = [write_newick(t) for t in binary_trees_up_to(5)]


def _root_edge(t, clade):
    return (t.root, t.find_clade(clade))


class TestJoint:
    def test_balanced(self, balanced4):
        joint = joint_rank_prob(balanced4, _root_edge(balanced4, "A,B"))
        assert joint == {(1, 2): Fraction(1, 2), (1, 3): Fraction(1, 2)}

    def test_caterpillar_point_mass(self):
        t = parse_newick("(((((A,B),C),D),E),F);")
        v = t.find_clade("A,B,C")
        u = t.parent(v)
        assert joint_rank_prob(t, (u, v)) == {(3, 4): Fraction(1)}

    def test_pendant_rejected(self, balanced4):
        with pytest.raises(TreeError):
            joint_rank_prob(balanced4, (balanced4.find_clade("A,B"), balanced4.leaf_id("A")))

    def test_not_an_edge(self, eleven_leaf):
        t = eleven_leaf
        with pytest.raises(TreeError):
            joint_rank_prob(t, (t.root, t.find_clade("a,b")))

    @pytest.mark.parametrize("newick", SMALL_BINARY)
    def test_oracle(self, newick):
        t, table = cached_rank_table(newick)
        for e in t.interior_edges():
            joint = joint_rank_prob(t, e)
            assert sum(joint.values()) == 1
            assert joint == table["joint"][e]
            assert all(i < j for i, j in joint)


class TestExpectedLength:
    def test_balanced(self, balanced4):
        assert expected_edge_length(balanced4, _root_edge(balanced4, "A,B")) == pytest.approx(2 / 3, abs=1e-15)

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_caterpillar(self, k):
        t = parse_newick("((((((A,B),C),D),E),F),G);")
        chain = sorted(t.interior, key=lambda w: -t.interior_counts[w])
        assert expected_edge_length(t, (chain[k - 1], chain[k])) == pytest.approx(1 / (k + 1), abs=1e-15)

    @pytest.mark.parametrize("newick", SMALL_BINARY)
    def test_oracle(self, newick):
        t, table = cached_rank_table(newick)
        for e in t.interior_edges():
            assert expected_edge_length(t, e) == pytest.approx(
                edge_length_oracle(t, e, table["extensions"]), abs=1e-12
            )

    def test_pendant_to_last_event(self, balanced4):
        t = balanced4
        a, b = t.find_clade("A,B"), t.leaf_id("A")
        # r(a) is 2 or 3 with equal odds; the last event has rank 3
        expected = 0.5 * harmonic(3, 3) + 0.5 * 0.0
        assert expected_pendant_length(t, (a, b)) == pytest.approx(expected, abs=1e-15)
        assert expected_pendant_length(t, (a, b), 0.25) == pytest.approx(expected + 0.25, abs=1e-15)

    def test_pendant_by_enumeration(self, eleven_leaf):
        t = eleven_leaf
        exts = list(enumerate_rank_functions(t))
        n_int = t.n_interior
        for v in t.leaves:
            u = t.parent(v)
            want = math.fsum(harmonic(r[u] + 1, n_int) for r in exts) / len(exts)
            assert expected_pendant_length(t, (u, v)) == pytest.approx(want, abs=1e-12)


class TestDepths:
    def test_root_zero(self, eleven_leaf):
        assert expected_depths(eleven_leaf)[eleven_leaf.root] == 0.0

    def test_caterpillar(self):
        t = parse_newick("((((((A,B),C),D),E),F),G);")
        chain = sorted(t.interior, key=lambda w: -t.interior_counts[w])
        depths = expected_depths(t)
        for k, v in enumerate(chain, 1):
            assert depths[v] == pytest.approx(harmonic(2, k), abs=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32), st.integers(3, 30))
    def test_telescoping(self, seed, n):
        t = sample_uniform(n, replicate_rng(seed, 0))
        depths = expected_depths(t)
        for u, v in t.interior_edges():
            assert depths[v] - depths[u] == pytest.approx(expected_edge_length(t, (u, v)), abs=1e-10)


class TestWeighted:
    def test_binary_identical(self, eleven_leaf):
        t = eleven_leaf
        for e in t.interior_edges():
            assert expected_edge_lengths_weighted(t, e) == expected_edge_length(t, e)

    def test_pendant_policy(self, balanced4):
        t = balanced4
        e = (t.find_clade("A,B"), t.leaf_id("A"))
        assert expected_edge_lengths_weighted(t, e) is None
        assert expected_edge_lengths_weighted(t, e, pendant_policy=PENDANT_TO_LAST_EVENT) == pytest.approx(
            expected_pendant_length(t, e), abs=1e-15
        )

    def test_symmetric_trifurcation(self):
        t = parse_newick("((A,B,C),D);")
        weights = {prob_yule(r) for r, _ in binary_resolutions(t)}
        assert len(weights) == 1
        e = (t.root, t.find_clade("A,B,C"))
        # every resolution has the same edge above the polytomy
        assert expected_edge_lengths_weighted(t, e) == pytest.approx(
            expected_edge_length(next(binary_resolutions(t))[0], e), abs=1e-15
        )

    def test_four_leaf_polytomy_weights(self):
        t = parse_newick("((A,B,C,D),E);")
        by_shape: dict[bool, Fraction] = {}
        for res, _ in binary_resolutions(t):
            v = t.find_clade("A,B,C,D")
            balanced = all(res.interior_counts[c] == 1 for c in res.children(v))
            by_shape[balanced] = by_shape.get(balanced, 0) + prob_yule(res)
        total = sum(by_shape.values())
        assert by_shape[True] / total == Fraction(1, 3)
        assert by_shape[False] / total == Fraction(2, 3)

    def test_path_sum_through_phantoms(self):
        t = parse_newick("(((A,B),C,D),E);")
        poly = t.find_clade("A,B,C,D")
        child = t.find_clade("A,B")
        num = den = 0.0
        for res, _ in binary_resolutions(t):
            w = float(prob_yule(res))
            path, x = 0.0, child
            while x != poly:
                path += expected_edge_length(res, (res.parent(x), x))
                x = res.parent(x)
            num += w * path
            den += w
        assert expected_edge_lengths_weighted(t, (poly, child)) == pytest.approx(num / den, abs=1e-14)

    def test_degree_five_rejected(self):
        t = parse_newick("((A,B,C,D,F),E);")
        with pytest.raises(PolytomyError):
            expected_edge_lengths_weighted(t, (t.root, t.find_clade("A,B,C,D,F")))


class TestReport:
    def test_rows(self, eleven_leaf):
        rep = edge_length_report(eleven_leaf)
        assert len(rep.edges) == 20
        pend = [e for e in rep.edges if e.pendant]
        assert len(pend) == 11 and all(e.expected_length is None for e in pend)
        assert all(e.expected_length > 0 for e in rep.edges if not e.pendant)
        assert rep.pendant_policy == PENDANT_UNDEFINED

    def test_parallel_matches_serial(self, eleven_leaf):
        a = edge_length_report(eleven_leaf, pendant_policy=PENDANT_TO_LAST_EVENT)
        b = edge_length_report(eleven_leaf, pendant_policy=PENDANT_TO_LAST_EVENT, workers=2)
        assert a.as_rows() == b.as_rows()

    def test_bad_policy(self, balanced4):
        with pytest.raises(ValueError):
            edge_length_report(balanced4, pendant_policy="guess")
