"""Closed-form oracles: worked values, limits, stability, and the registry."""

import math

import numpy as np
import pytest

from rectree import formulas as F
from rectree.samplers import GuardError, ShuffleParams
from rectree.weights import WeightSequence


class TestHarmonic:
    def test_basics(self):
        assert F.harmonic(0) == 0.0
        assert F.harmonic(1) == 1.0
        assert F.harmonic(3) == pytest.approx(11 / 6)
        assert F.harmonic2(2) == pytest.approx(1.25)

    def test_monotone_and_bounded(self):
        values = [F.harmonic(n) for n in range(1, 200)]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert F.harmonic2(10**5) < math.pi**2 / 6

    def test_concurrent_growth(self):
        import threading

        from rectree.formulas import HarmonicCache

        cache = HarmonicCache()
        threads = [
            threading.Thread(target=lambda: cache.h(5000)) for _ in range(8)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert cache.h(5000) == pytest.approx(F.harmonic(5000))


class TestNumericHelpers:
    def test_power01(self):
        assert F.power01(0.0, 5) == 0.0
        assert F.power01(0.0, 0) == 1.0
        assert F.power01(1.0, 99) == 1.0
        assert F.power01(0.5, 3) == pytest.approx(0.125)
        with pytest.raises(GuardError):
            F.power01(1.5, 2)

    def test_pow_diff_quotient(self):
        # matches (x^m - y^m)/(x - y) away from the diagonal
        assert F.pow_diff_quotient(0.8, 0.3, 4) == pytest.approx(
            (0.8**4 - 0.3**4) / 0.5
        )
        # and the derivative limit on it
        assert F.pow_diff_quotient(0.6, 0.6, 5) == pytest.approx(5 * 0.6**4)
        assert F.pow_diff_quotient(0.5, 0.0, 3) == 0.25
        assert F.pow_diff_quotient(0.3, 0.3, 0) == 0.0

    def test_geom_sum(self):
        assert F.geom_sum(0.5, 3) == pytest.approx(1.75)
        assert F.geom_sum(1.0, 7) == 7.0
        assert F.geom_sum(0.0, 4) == 1.0


class TestUrtBaselines:
    def test_leaves(self):
        assert F.urt_leaves_mean(6) == 3.0
        assert F.urt_leaves_var(6) == 0.5
        assert F.urt_leaves_var(2) == 0.0

    def test_branches_depth(self):
        assert F.urt_branches_mean(4) == pytest.approx(11 / 6)
        assert F.urt_branches_var(4) == pytest.approx(11 / 6 - 49 / 36)
        assert F.urt_depth_mean(4) == F.urt_branches_mean(4)

    def test_distance(self):
        # distance(1, 2) is always 1
        assert F.urt_distance_mean(1, 2) == pytest.approx(1.0)
        assert F.urt_distance_var(1, 2) == pytest.approx(0.0)
        # setting i = 1 recovers the depth formulas
        for n in (3, 5, 8):
            assert F.urt_distance_mean(1, n) == pytest.approx(F.harmonic(n - 1))
            assert F.urt_distance_var(1, n) == pytest.approx(
                F.harmonic(n - 1) - F.harmonic2(n - 1)
            )
        with pytest.raises(GuardError):
            F.urt_distance_mean(3, 3)

    def test_kdesc_constants(self):
        assert F.urt_kdesc_alpha(0) == 0.5
        assert F.urt_kdesc_alpha(1) == pytest.approx(1 / 6)
        # at k = 0 the asymptotic variance is the leaf variance rate 1/12
        assert F.urt_kdesc_sigma2(0) == pytest.approx(1 / 12)

    def test_branch_size(self):
        assert F.urt_branch_size_limit_rate(4) == 0.25
        assert F.urt_branch_size_tail_prob(5, 8) == 0.2
        with pytest.raises(GuardError):
            F.urt_branch_size_tail_prob(2, 8)


class TestWrtFormulas:
    def test_const_reduces_to_urt(self):
        w = WeightSequence.const()
        for n in (2, 5, 9):
            assert F.wrt_branches_mean(w, n) == pytest.approx(F.harmonic(n - 1))
            assert F.wrt_branches_var(w, n) == pytest.approx(
                F.harmonic(n - 1) - F.harmonic2(n - 1)
            )
            assert F.wrt_depth_mean(w, n) == pytest.approx(F.harmonic(n - 1))

    def test_linear_branches(self):
        w = WeightSequence.linear()
        assert F.wrt_branches_mean(w, 4) == pytest.approx(1.5)  # 2(1 - 1/n)
        assert F.wrt_branches_mean(w, 100) == pytest.approx(2 * (1 - 1 / 100))

    def test_hoppe_branches(self):
        w = WeightSequence.hoppe(2.0)
        assert F.wrt_branches_mean(w, 3) == pytest.approx(5 / 3)  # 2(1/2 + 1/3)
        assert F.hoppe_branches_mean(2.0, 3) == pytest.approx(5 / 3)

    def test_linear_depth(self):
        w = WeightSequence.linear()
        assert F.wrt_depth_mean(w, 3) == pytest.approx(5 / 3)

    def test_geometric_depth_linear_growth(self):
        # E[depth] > (n-2)(a-1)/a for geometric weights a > 1
        w = WeightSequence.geometric(2.0)
        for n in (10, 50):
            assert F.wrt_depth_mean(w, n) > (n - 2) * 0.5

    def test_leaf_probability_telescopes(self):
        w = WeightSequence.const()
        for n in (2, 5, 10):
            total = sum(F.wrt_leaf_probability(w, i, n) for i in range(2, n + 1))
            assert total == pytest.approx(n / 2)
            assert F.wrt_leaves_mean(w, n) == pytest.approx(n / 2)

    def test_leaf_probability_node_n_is_leaf(self):
        w = WeightSequence.linear()
        assert F.wrt_leaf_probability(w, 7, 7) == 1.0

    def test_thetak_leaves_reduces_to_urt_at_theta_1(self):
        for k in (1, 2, 3):
            for n in (2, 4, 7, 12):
                assert F.thetak_leaves_mean_exact(1.0, k, n) == pytest.approx(n / 2)

    def test_hoppe_leaf_mean_frozen(self):
        # enumeration at n = 3, theta = 2: (1/3)*1 + (2/3)*2 = 5/3
        assert F.hoppe_leaves_mean_exact(2.0, 3) == pytest.approx(5 / 3)

    def test_leading_term(self):
        # mean - n/2 approaches (theta-1)/2 = 1 for theta = 3
        assert F.hoppe_leaves_mean_exact(3.0, 4000) - 2000 == pytest.approx(1.0, abs=5e-3)

    def test_concentration_bounds(self):
        assert F.thetak_leaves_concentration_bound(2.0, 3, 100, 0.0) == pytest.approx(2.0)
        assert F.hoppe_leaves_concentration_bound(3.0, 100, 0.0) == pytest.approx(2.0)
        ts = np.linspace(0, 30, 7)
        vals = [F.thetak_leaves_concentration_bound(2.0, 3, 100, t) for t in ts]
        assert all(b < a for a, b in zip(vals, vals[1:]))
        # k = 1 kills the correction factor: matches the Hoppe bound exactly
        for t in (0.0, 5.0, 12.0):
            assert F.thetak_leaves_concentration_bound(2.5, 1, 50, t) == pytest.approx(
                F.hoppe_leaves_concentration_bound(2.5, 50, t)
            )

    def test_clt_diagnostics(self):
        diag = F.wrt_clt_diagnostics(WeightSequence.const(), 1000)
        assert diag["poisson_tv_bound"] == pytest.approx(
            F.harmonic2(999) / F.harmonic(999)
        )
        assert diag["wasserstein_bound"] > 0
        # linear weights: branch variance stays below 1 (limit 14 - 4 pi^2/3)
        linear = F.wrt_clt_diagnostics(WeightSequence.linear(), 2000)
        assert linear["branches_var"] < 1.0
        assert linear["branches_var"] == pytest.approx(14 - 4 * math.pi**2 / 3, abs=5e-3)

    def test_tv_bound_decreases(self):
        values = [
            F.wrt_clt_diagnostics(WeightSequence.const(), n)["poisson_tv_bound"]
            for n in (10, 100, 1000, 10**4, 10**5, 10**6)
        ]
        assert all(b < a for a, b in zip(values, values[1:]))


class TestBrtFormulas:
    def test_leaves(self):
        sp = ShuffleParams.uniform(2)
        assert F.brt_leaves_mean(sp, 4) == 1.5
        assert F.brt_leaves_var(sp, 4) == pytest.approx(0.25)
        assert F.art_leaves_mean(2, 4) == 1.5
        assert F.art_leaves_var(2, 4) == pytest.approx(0.25)
        assert F.brt_leaves_mean(ShuffleParams([1.0]), 9) == 1.0  # chain
        # a -> infinity limits
        assert F.art_leaves_mean(10**6, 10) == pytest.approx(5.0, abs=1e-4)
        assert F.art_leaves_var(10**6, 10) == pytest.approx(10 / 12, abs=1e-4)

    def test_branches_mean(self):
        sp = ShuffleParams.uniform(2)
        assert F.brt_branches_mean(sp, 4) == pytest.approx(11 / 8)
        assert F.art_branches_mean(2, 4) == pytest.approx(11 / 8)
        assert F.brt_branches_mean(ShuffleParams([1.0]), 7) == pytest.approx(1.0)
        # n -> infinity limit H_a
        assert F.art_branches_mean(5, 10**4) == pytest.approx(F.harmonic(5), abs=1e-9)
        assert F.brt_branches_mean_limit(ShuffleParams.uniform(5)) == pytest.approx(
            F.harmonic(5)
        )

    def test_branches_mean_a_to_urt(self):
        # |value - H_(n-1)| < 2 n^2 / a, decreasing in a
        for n in (4, 6, 8):
            errors = []
            for a in (100, 1000, 10000):
                err = abs(F.art_branches_mean(a, n) - F.harmonic(n - 1))
                assert err < 2 * n * n / a
                errors.append(err)
            assert errors[0] > errors[1] > errors[2]

    def test_branches_var_frozen(self):
        assert F.art_branches_var(2, 4) == pytest.approx(15 / 64)
        assert F.brt_branches_var(ShuffleParams.uniform(2), 4) == pytest.approx(15 / 64)
        assert F.art_branches_var(1, 9) == 0.0

    def test_branches_var_limit_a(self):
        # converges like 1.2/a: the printed limit is reached at rate O(1/a)
        target = F.harmonic(5) - F.harmonic2(5)
        for a in (50, 200, 1000):
            assert abs(F.art_branches_var(a, 6) - target) < 2.0 / a
        assert abs(F.art_branches_var(2000, 6) - target) < 1e-3
        assert F.art_branches_var_limit_a(6) == pytest.approx(target)

    def test_branches_var_limit_n(self):
        sp = ShuffleParams.uniform(3)
        far = F.brt_branches_var(sp, 4000)
        assert F.brt_branches_var_limit(sp) == pytest.approx(far, abs=1e-9)

    def test_uniform_matches_general(self):
        for a in (2, 3, 5):
            sp = ShuffleParams.uniform(a)
            for n in (3, 4, 7, 20):
                assert F.art_branches_mean(a, n) == pytest.approx(
                    F.brt_branches_mean(sp, n), abs=1e-12
                )
                assert F.art_branches_var(a, n) == pytest.approx(
                    F.brt_branches_var(sp, n), abs=1e-12
                )
                for k in (1, 2):
                    assert F.art_kdesc_mean(a, n, k) == pytest.approx(
                        F.brt_kdesc_mean(sp, n, k), abs=1e-12
                    )
                    if n >= 2 * k + 1:
                        assert F.art_kdesc_var(a, n, k) == pytest.approx(
                            F.brt_kdesc_var(sp, n, k), abs=1e-12
                        )

    def test_kdesc_mean(self):
        # k = 1 internal nodes: (n-2)(a+1)/(2a) + 1
        assert F.art_kdesc_mean(2, 4, 1) == pytest.approx(2.5)
        for a, n in ((2, 6), (3, 9)):
            assert F.art_kdesc_mean(a, n, 1) == pytest.approx(
                (n - 2) * (a + 1) / (2 * a) + 1
            )
        # k = 0 counts everything
        assert F.brt_kdesc_mean(ShuffleParams.uniform(3), 7, 0) == 7.0
        assert F.art_kdesc_mean_limit_a(12, 2) == 4.0

    def test_kdesc_var_guard(self):
        with pytest.raises(GuardError):
            F.brt_kdesc_var(ShuffleParams.uniform(2), 4, 2)
        assert F.brt_kdesc_var(ShuffleParams.uniform(2), 9, 0) == 0.0

    def test_exactk_telescopes_to_n(self):
        for p in (ShuffleParams.uniform(2), ShuffleParams([0.5, 0.3, 0.2])):
            for n in (3, 5, 6):
                total = sum(F.brt_exactk_mean(p, n, k) for k in range(n))
                assert total == pytest.approx(n, abs=1e-10)

    def test_exactk_limit(self):
        assert F.art_exactk_mean_limit_a(12, 0) == pytest.approx(6.0)  # n/2
        big_a = F.art_exactk_mean(10**6, 12, 1)
        assert big_a == pytest.approx(12 / 6, abs=1e-4)

    def test_position_pmf(self):
        sp = ShuffleParams.uniform(2)
        assert F.brt_position_pmf(sp, 3, 2) == pytest.approx(0.25)
        assert F.brt_position_pmf(sp, 3, 3) == pytest.approx(0.75)
        for p in (sp, ShuffleParams([0.6, 0.3, 0.1]), ShuffleParams.uniform(4)):
            for n in (3, 5, 9):
                total = F.brt_position_pmf_vector(p, n).sum()
                assert total == pytest.approx(1.0, abs=1e-12)
        # one pile: position is surely n
        one = ShuffleParams([1.0])
        assert F.brt_position_pmf(one, 6, 6) == 1.0
        assert F.brt_position_pmf(one, 6, 3) == 0.0

    def test_depth_mean(self):
        one = ShuffleParams([1.0])
        for n in (2, 5, 9):
            assert F.brt_depth_mean(one, n) == pytest.approx(n - 1)
        assert F.brt_depth_mean(ShuffleParams.uniform(2), 4) == pytest.approx(19 / 8)
        # E/n approaches p_1
        sp = ShuffleParams.uniform(4)
        assert F.brt_depth_mean(sp, 2000) / 2000 == pytest.approx(0.25, abs=0.005)
        assert F.brt_depth_limit_rate(sp) == 0.25
        # a -> infinity recovers the URT depth H_(n-1)
        assert F.art_depth_mean(2000, 6) == pytest.approx(F.harmonic(5), abs=0.01)


class TestConstants:
    def test_values(self):
        assert F.golomb_dickman() == pytest.approx(0.62432998854, abs=1e-11)
        assert F.ln2() == pytest.approx(math.log(2))
        assert F.largest_branch_cdf_tail(1.0) == 1.0
        assert F.largest_branch_cdf_tail(0.5) == pytest.approx(1 - math.log(2))
        assert F.largest_branch_cdf_tail(0.75) == pytest.approx(1 - math.log(4 / 3))
        with pytest.raises(GuardError):
            F.largest_branch_cdf_tail(0.4)


class TestRegistry:
    def test_ids_are_unique_and_sorted_access(self):
        ids = F.formula_ids()
        assert len(ids) == len(set(ids))
        assert "brt.branches.mean" in ids
        assert "const.golomb_dickman" in ids

    def test_evaluate(self):
        assert F.evaluate_formula("urt.leaves.mean", {"n": 10}) == 5.0
        assert F.evaluate_formula(
            "brt.branches.mean", {"p": [0.5, 0.5], "n": 4}
        ) == pytest.approx(11 / 8)
        assert F.evaluate_formula("art.branches.mean", {"a": 2, "n": 4}) == pytest.approx(11 / 8)
        assert F.evaluate_formula(
            "wrt.branches.mean", {"weights": "hoppe:2", "n": 3}
        ) == pytest.approx(5 / 3)
        assert F.evaluate_formula("const.ln2", {}) == pytest.approx(math.log(2))

    def test_evaluate_errors(self):
        with pytest.raises(GuardError):
            F.evaluate_formula("no.such.formula", {})
        with pytest.raises(GuardError):
            F.evaluate_formula("urt.leaves.mean", {})

    def test_every_entry_evaluates(self):
        defaults = {
            "n": 6, "i": 2, "j": 5, "k": 2, "m": 4, "a": 3, "c": 0.75,
            "t": 5.0, "theta": 2.0, "weights": "hoppe:2", "p": [0.5, 0.3, 0.2],
        }
        for formula_id in F.formula_ids():
            value = F.evaluate_formula(formula_id, defaults)
            assert math.isfinite(value)
