"""Shared helpers: naive reference implementations of the tree statistics.

These deliberately use a different mechanism (children lists, recursion,
BFS) than the array passes in rectree.trees, so they can serve as an
independent oracle for both the library and the numba kernels.
"""

from __future__ import annotations

import itertools
from collections import deque

import pytest


def children_map(tree):
    kids = {v: [] for v in range(1, tree.n + 1)}
    for j in range(2, tree.n + 1):
        kids[tree.parent(j)].append(j)
    return kids


def naive_leaves(tree):
    if tree.n == 1:
        return 0
    kids = children_map(tree)
    return sum(1 for v in kids if not kids[v])


def naive_depth(tree, v):
    d = 0
    while v != 1:
        v = tree.parent(v)
        d += 1
    return d


def naive_height(tree):
    return max(naive_depth(tree, v) for v in range(1, tree.n + 1))


def naive_distance(tree, i, j):
    adj = {v: set() for v in range(1, tree.n + 1)}
    for w in range(2, tree.n + 1):
        adj[w].add(tree.parent(w))
        adj[tree.parent(w)].add(w)
    queue = deque([(i, 0)])
    seen = {i}
    while queue:
        v, d = queue.popleft()
        if v == j:
            return d
        for u in adj[v]:
            if u not in seen:
                seen.add(u)
                queue.append((u, d + 1))
    raise AssertionError("disconnected tree")


def naive_subtree_size(tree, v):
    kids = children_map(tree)

    def size(u):
        return 1 + sum(size(c) for c in kids[u])

    return size(v)


def naive_descendants(tree, v):
    return naive_subtree_size(tree, v) - 1


def naive_branch_sizes(tree):
    kids = children_map(tree)
    return sorted(naive_subtree_size(tree, c) for c in kids[1])


def all_parent_tuples(n):
    """Every increasing tree on n nodes as a parent tuple."""
    return itertools.product(*(range(1, j) for j in range(2, n + 1)))


@pytest.fixture(scope="session")
def small_trees():
    """All trees with 2..6 nodes, as RecursiveTree objects."""
    from rectree.trees import RecursiveTree

    return {
        n: [RecursiveTree(p) for p in all_parent_tuples(n)] for n in range(2, 7)
    }
