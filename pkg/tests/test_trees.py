"""Tree statistics against naive oracles, paper figures, and invariants."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    all_parent_tuples,
    naive_branch_sizes,
    naive_depth,
    naive_descendants,
    naive_distance,
    naive_height,
    naive_leaves,
)
from rectree.trees import RecursiveTree, TreeError

# Tree of the word 16387254 (step-by-step construction figure).
FIGURE_TREE = RecursiveTree.from_parent_map(
    8, {2: 1, 3: 1, 4: 2, 5: 2, 6: 1, 7: 3, 8: 3}
)


class TestExamples:
    def test_chain(self):
        t = RecursiveTree.chain(4)
        assert t.leaves() == 1
        assert t.branches() == 1
        assert t.depth(4) == 3
        assert t.height() == 3
        assert t.distance(1, 4) == 3
        assert t.branch_size_histogram() == {3: 1}
        assert t.largest_branch() == 3
        assert t.nodes_with_at_least_k(2) == 2  # nodes 1 and 2

    def test_star(self):
        t = RecursiveTree.star(4)
        assert t.leaves() == 3
        assert t.branches() == 3
        assert t.depth(3) == 1
        assert t.height() == 1
        assert t.max_degree() == 3
        assert t.distance(2, 3) == 2
        assert t.branch_size_histogram() == {1: 3}
        assert t.largest_branch() == 1
        assert t.nodes_with_at_least_k(1) == 1  # only the root

    def test_figure_word_tree(self):
        t = FIGURE_TREE
        assert t.leaves() == 5  # leaves are 4,5,6,7,8
        assert t.branches() == 3
        assert t.depth(7) == 2
        assert t.height() == 2
        assert t.distance(4, 5) == 2

    def test_figure_1324(self):
        # 2-shuffle word 1324: children of 1 are {2,3}, 4 under 2
        t = RecursiveTree.from_parent_map(4, {2: 1, 3: 1, 4: 2})
        assert t.branches() == 2
        assert t.branch_size_histogram() == {1: 1, 2: 1}
        assert t.largest_branch() == 2

    def test_kdescendant_figure(self):
        # Tree of gamma = 2673845: among non-root nodes exactly 2 and 3
        # have >= 2 descendants; the root always has n-1.
        t = RecursiveTree.from_parent_map(
            8, {2: 1, 3: 2, 4: 3, 5: 4, 6: 2, 7: 6, 8: 3}
        )
        desc = t.descendant_counts()
        heavy = [v for v in range(2, 9) if desc[v - 1] >= 2]
        assert heavy == [2, 3]
        assert t.nodes_with_at_least_k(2) == 3  # nodes 1, 2 and 3

    def test_single_node(self):
        t = RecursiveTree([])
        assert t.n == 1
        assert t.leaves() == 0
        assert t.branches() == 0
        assert t.height() == 0
        assert t.depth(1) == 0


class TestAgainstNaive:
    def test_exhaustive_small_n(self, small_trees):
        for n, trees in small_trees.items():
            for t in trees:
                assert t.leaves() == naive_leaves(t)
                assert t.height() == naive_height(t)
                assert [t.depth(v) for v in range(1, n + 1)] == [
                    naive_depth(t, v) for v in range(1, n + 1)
                ]
                assert sorted(
                    s for s, c in t.branch_size_histogram().items() for _ in range(c)
                ) == naive_branch_sizes(t)
                assert list(t.descendant_counts()) == [
                    naive_descendants(t, v) for v in range(1, n + 1)
                ]

    def test_distance_exhaustive_n5(self, small_trees):
        for t in small_trees[5]:
            for i in range(1, 6):
                for j in range(1, 6):
                    if i != j:
                        assert t.distance(i, j) == naive_distance(t, i, j)

    @given(st.integers(2, 200), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_invariants_random(self, n, seed):
        rng = np.random.default_rng(seed)
        parents = [int(rng.integers(1, j)) for j in range(2, n + 1)]
        t = RecursiveTree(parents)
        outdegs = [t.outdegree(v) for v in range(1, n + 1)]
        assert sum(outdegs) == n - 1
        assert t.leaves() + t.nodes_with_at_least_k(1) == n
        assert t.height() == max(t.depth(v) for v in range(1, n + 1))
        assert t.distance(1, n) == t.depth(n)
        hist = t.branch_size_histogram()
        assert sum(m * c for m, c in hist.items()) == n - 1
        assert t.largest_branch() == max(hist)
        assert t.largest_branch() <= n - 1
        assert t.nodes_with_at_least_k(0) == n
        k = int(rng.integers(0, n))
        assert (
            t.nodes_with_at_least_k(k) - t.nodes_with_at_least_k(k + 1)
            == t.nodes_with_exactly_k(k)
        )


class TestUniformMoments:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7, 8])
    def test_leaf_moments_exact(self, n):
        # Rational arithmetic over the full enumeration: mean n/2 for n >= 2
        # and variance n/12 for n >= 3 (the two-node tree is deterministic).
        counts = [
            RecursiveTree(p).leaves() for p in all_parent_tuples(n)
        ]
        total = len(counts)
        mean = Fraction(sum(counts), total)
        assert mean == Fraction(n, 2)
        var = Fraction(sum(c * c for c in counts), total) - mean * mean
        assert var == (Fraction(n, 12) if n >= 3 else 0)


class TestSerialization:
    def test_golden(self):
        t = RecursiveTree.from_parent_map(4, {2: 1, 3: 1, 4: 2})
        assert t.to_text() == "4\n2 1\n3 1\n4 2\n"

    def test_round_trip(self, small_trees):
        for trees in small_trees.values():
            for t in trees[:10]:
                assert RecursiveTree.from_text(t.to_text()) == t

    def test_round_trip_single(self):
        assert RecursiveTree.from_text(RecursiveTree([]).to_text()).n == 1

    def test_bad_text(self):
        with pytest.raises(TreeError):
            RecursiveTree.from_text("3\n2 1\n")
        with pytest.raises(TreeError):
            RecursiveTree.from_text("")


class TestValidation:
    def test_bad_parent(self):
        with pytest.raises(TreeError):
            RecursiveTree([2])  # parent(2) must be 1
        with pytest.raises(TreeError):
            RecursiveTree([1, 3])  # parent(3) must be < 3
        with pytest.raises(TreeError):
            RecursiveTree([0, 1])

    def test_bad_map(self):
        with pytest.raises(TreeError):
            RecursiveTree.from_parent_map(3, {2: 1})
        with pytest.raises(TreeError):
            RecursiveTree.from_parent_map(3, {2: 1, 4: 1})

    def test_out_of_range_nodes(self):
        t = RecursiveTree.chain(4)
        with pytest.raises(TreeError):
            t.depth(5)
        with pytest.raises(TreeError):
            t.distance(1, 1)
        with pytest.raises(TreeError):
            t.parent(1)

    def test_parents_read_only(self):
        t = RecursiveTree.chain(4)
        with pytest.raises(ValueError):
            t.parents[0] = 2
