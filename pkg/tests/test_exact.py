"""Exhaustive enumeration engines and exact distributions."""

import math

import numpy as np
import pytest

from rectree import exact as E
from rectree import formulas as F
from rectree.samplers import GuardError, ShuffleParams
from rectree.trees import RecursiveTree
from rectree.weights import WeightSequence


class TestExactDistribution:
    def test_validation(self):
        with pytest.raises(GuardError):
            E.ExactDistribution([1, 2], [0.6, 0.6])
        with pytest.raises(GuardError):
            E.ExactDistribution([1, 1], [0.5, 0.5])
        with pytest.raises(GuardError):
            E.ExactDistribution([1], [0.5, 0.5])

    def test_tv_hand_case(self):
        a = E.ExactDistribution([0, 1], [0.5, 0.5])
        b = E.ExactDistribution([1, 2], [0.5, 0.5])
        assert a.tv(b) == pytest.approx(0.5)
        assert a.tv(a) == 0.0

    def test_moments(self):
        d = E.ExactDistribution([0, 2], [0.5, 0.5])
        assert d.moments() == (1.0, 1.0)


class TestTreeEnumeration:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_counts(self, n):
        assert len(E.enumerate_trees(n)) == math.factorial(n - 1)

    def test_guard(self):
        with pytest.raises(GuardError):
            E.enumerate_trees(10)

    def test_n4_matches_figure(self):
        keys = {t.key() for t in E.enumerate_trees(4)}
        assert keys == {
            (1, 2, 3), (1, 2, 2), (1, 1, 2), (1, 1, 3), (1, 2, 1), (1, 1, 1),
        }

    def test_urt_uniform(self):
        pmf = E.urt_tree_pmf(4)
        assert np.allclose(pmf.mass, 1 / 6)


class TestWrtPmf:
    def test_const_equals_uniform(self):
        assert E.wrt_tree_pmf(WeightSequence.const(), 4).tv(E.urt_tree_pmf(4)) < 1e-14

    def test_hoppe_one_equals_urt(self):
        w = WeightSequence.hoppe(1.0)
        assert E.wrt_tree_pmf(w, 4).tv(E.urt_tree_pmf(4)) < 1e-14

    def test_thetak_k1_equals_hoppe(self):
        a = E.wrt_tree_pmf(WeightSequence.theta_k(2.0, 1), 5)
        b = E.wrt_tree_pmf(WeightSequence.hoppe(2.0), 5)
        assert a.tv(b) < 1e-14

    def test_hoppe_n3_masses(self):
        pmf = E.wrt_tree_pmf(WeightSequence.hoppe(2.0), 3)
        assert pmf.probability((1, 1)) == pytest.approx(2 / 3)  # 3 -> 1
        assert pmf.probability((1, 2)) == pytest.approx(1 / 3)  # chain

    def test_masses_sum_linear_n6(self):
        pmf = E.wrt_tree_pmf(WeightSequence.linear(), 6)
        assert float(np.sum(pmf.mass)) == pytest.approx(1.0, abs=1e-12)


class TestBrtPmf:
    def test_figure_exact(self):
        pmf = E.brt_tree_pmf(ShuffleParams.uniform(2), 4)
        expected = {
            (1, 2, 3): 0.5,
            (1, 2, 2): 0.125,
            (1, 1, 2): 0.125,
            (1, 1, 3): 0.125,
            (1, 2, 1): 0.125,
        }
        assert len(pmf) == 5
        for key, prob in expected.items():
            assert pmf.probability(key) == pytest.approx(prob, abs=1e-12)

    def test_single_pile_point_mass(self):
        pmf = E.brt_tree_pmf(ShuffleParams.uniform(1), 5)
        assert len(pmf) == 1
        assert pmf.probability(RecursiveTree.chain(5).key()) == 1.0

    def test_guard(self):
        with pytest.raises(GuardError):
            E.brt_word_pmf(ShuffleParams.uniform(10), 9, guard=10**6)

    @pytest.mark.parametrize("a", [2, 3])
    @pytest.mark.parametrize("n", [3, 4, 5, 6])
    def test_mechanism_equality_uniform(self, a, n):
        digits = E.brt_word_pmf(ShuffleParams.uniform(a), n)
        physical = E.brt_word_pmf_cut_riffle(ShuffleParams.uniform(a), n)
        assert digits.tv(physical) < 1e-12

    def test_mechanism_equality_biased(self):
        sp = ShuffleParams([0.6, 0.3, 0.1])
        digits = E.brt_word_pmf(sp, 5)
        physical = E.brt_word_pmf_cut_riffle(sp, 5)
        assert digits.tv(physical) < 1e-12
        trees = E.brt_tree_pmf(sp, 5).tv(E.brt_tree_pmf_cut_riffle(sp, 5))
        assert trees < 1e-12

    def test_large_a_approaches_uniform(self):
        # TV to the uniform law decreases in a and obeys the distinct-digit bound
        n = 4
        uniform = E.urt_tree_pmf(n)
        last = 1.0
        for a in (4, 8, 16, 32):
            tv = E.brt_tree_pmf(ShuffleParams.uniform(a), n).tv(uniform)
            falling = math.prod(a - i for i in range(n - 1))
            bound = 1.0 - falling / a ** (n - 1)
            assert tv <= bound + 1e-12
            assert tv < last
            last = tv


class TestStatisticPmf:
    def test_urt_leaf_moments(self):
        pmf = E.statistic_pmf(E.urt_tree_pmf(4), "leaves")
        mean, var = pmf.moments()
        assert mean == pytest.approx(2.0)
        assert var == pytest.approx(4 / 12)

    def test_branch_figure_moments(self):
        pmf = E.statistic_pmf(E.brt_tree_pmf(ShuffleParams.uniform(2), 4), "branches")
        mean, var = pmf.moments()
        assert mean == pytest.approx(11 / 8)
        assert var == pytest.approx(15 / 64)

    def test_statistic_selectors(self):
        tree_pmf = E.urt_tree_pmf(4)
        for stat in ("leaves", "branches", "depth_n", "height", "max_degree",
                     "largest_branch", "y_ge:1", "x_eq:0"):
            dist = E.statistic_pmf(tree_pmf, stat)
            assert float(np.sum(dist.mass)) == pytest.approx(1.0)
        with pytest.raises(GuardError):
            E.statistic_fn("bogus")

    def test_callable_selector(self):
        dist = E.statistic_pmf(E.urt_tree_pmf(3), lambda t: t.n)
        assert dist.support == [3]

    def test_branch_size_tail_probability(self):
        # P(beta_{m,n} = 1) = 1/m for (n-1)/2 < m < n, here n=6, m in {3,4,5}
        pmf = E.urt_tree_pmf(6)
        for m in (3, 4, 5):
            hit = E.statistic_pmf(
                pmf, lambda t, m=m: int(m in t.branch_size_histogram())
            )
            assert hit.probability(1) == pytest.approx(1 / m, abs=1e-12)


class TestModelDispatch:
    def test_models(self):
        assert E.tree_pmf_for_model("urt", 4).tv(E.urt_tree_pmf(4)) == 0.0
        assert (
            E.tree_pmf_for_model("hoppe", 4, theta=2.0).tv(
                E.wrt_tree_pmf(WeightSequence.hoppe(2.0), 4)
            )
            == 0.0
        )
        assert (
            E.tree_pmf_for_model("thetak", 4, theta=2.0, k=2).tv(
                E.wrt_tree_pmf(WeightSequence.theta_k(2.0, 2), 4)
            )
            == 0.0
        )
        assert (
            E.tree_pmf_for_model("brt", 4, params=ShuffleParams.uniform(2)).tv(
                E.brt_tree_pmf(ShuffleParams.uniform(2), 4)
            )
            == 0.0
        )

    def test_dispatch_errors(self):
        with pytest.raises(GuardError):
            E.tree_pmf_for_model("wrt", 4)
        with pytest.raises(GuardError):
            E.tree_pmf_for_model("nope", 4)


class TestOracleAgainstEnumeration:
    """Spot checks; the full sweep lives in the acceptance suite."""

    def test_position_distribution(self):
        for sp in (ShuffleParams.uniform(2), ShuffleParams([0.5, 0.3, 0.2])):
            for n in (3, 4, 5):
                words = E.brt_word_pmf(sp, n)
                pos = words.map_support(lambda w: w.index(n) + 2)
                for k in range(2, n + 1):
                    assert pos.probability(k) == pytest.approx(
                        F.brt_position_pmf(sp, n, k), abs=1e-12
                    )

    def test_wrt_branch_depth_oracles(self):
        w = WeightSequence.reciprocal(2)
        pmf = E.wrt_tree_pmf(w, 6)
        bm, bv = E.statistic_pmf(pmf, "branches").moments()
        assert bm == pytest.approx(F.wrt_branches_mean(w, 6), abs=1e-12)
        assert bv == pytest.approx(F.wrt_branches_var(w, 6), abs=1e-12)
        dm, dv = E.statistic_pmf(pmf, "depth_n").moments()
        assert dm == pytest.approx(F.wrt_depth_mean(w, 6), abs=1e-12)
        assert dv == pytest.approx(F.wrt_depth_var(w, 6), abs=1e-12)
