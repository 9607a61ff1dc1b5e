"""Increasing (recursive) trees on {1..n} and their per-tree statistics.

A tree is stored as a parent array: entry j-2 holds parent(j) for
j = 2..n, with 1 <= parent(j) < j.  That single invariant makes the tree
increasing, connected, and rooted at 1.  Instances are immutable after
construction and every statistic is a pure function of the array, so trees
can be shared freely across parallel workers.
"""

from __future__ import annotations

from collections import Counter
from typing import Dict, Iterable, Mapping

import numpy as np


class TreeError(ValueError):
    """Malformed tree input (bad parent array, node out of range, ...)."""


class RecursiveTree:
    __slots__ = ("n", "_parents")

    def __init__(self, parents: Iterable[int]):
        arr = np.asarray(list(parents) if not isinstance(parents, np.ndarray) else parents,
                         dtype=np.int64)
        n = arr.size + 1
        if n < 1:
            raise TreeError("a tree needs at least one node")
        js = np.arange(2, n + 1)
        if arr.size and (np.any(arr < 1) or np.any(arr >= js)):
            bad = int(js[(arr < 1) | (arr >= js)][0])
            raise TreeError(f"parent of node {bad} must lie in [1, {bad - 1}]")
        arr.setflags(write=False)
        self.n = n
        self._parents = arr

    # -- construction helpers ---------------------------------------------

    @classmethod
    def from_parent_map(cls, n: int, mapping: Mapping[int, int]) -> "RecursiveTree":
        if set(mapping) != set(range(2, n + 1)):
            raise TreeError(f"parent map must have exactly the keys 2..{n}")
        return cls([mapping[j] for j in range(2, n + 1)])

    @classmethod
    def chain(cls, n: int) -> "RecursiveTree":
        return cls(range(1, n))

    @classmethod
    def star(cls, n: int) -> "RecursiveTree":
        return cls([1] * (n - 1))

    # -- basic access -------------------------------------------------------

    @property
    def parents(self) -> np.ndarray:
        """Read-only parent array; entry j-2 is parent(j)."""
        return self._parents

    def parent(self, j: int) -> int:
        if not 2 <= j <= self.n:
            raise TreeError(f"node {j} has no parent entry (n={self.n})")
        return int(self._parents[j - 2])

    def parent_map(self) -> Dict[int, int]:
        return {j: int(self._parents[j - 2]) for j in range(2, self.n + 1)}

    def key(self) -> tuple:
        """Canonical hashable key (used to aggregate exact distributions)."""
        return tuple(int(p) for p in self._parents)

    def __eq__(self, other) -> bool:
        return isinstance(other, RecursiveTree) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:  # pragma: no cover
        return f"RecursiveTree(n={self.n}, parents={self.key()})"

    # -- statistics ------------------------------------------------------

    def leaves(self) -> int:
        """Number of nodes with no children (0 for the single-node tree)."""
        if self.n == 1:
            return 0
        internal = int(np.count_nonzero(np.bincount(self._parents)))
        return self.n - internal

    def branches(self) -> int:
        """Out-degree of the root."""
        return int(np.count_nonzero(self._parents == 1))

    def depths(self) -> np.ndarray:
        """Depth of every node; index v-1 holds depth(v), depth(1) = 0."""
        d = np.zeros(self.n + 1, dtype=np.int64)
        par = self._parents
        for j in range(2, self.n + 1):
            d[j] = d[par[j - 2]] + 1
        return d[1:]

    def depth(self, v: int) -> int:
        self._check_node(v)
        d = 0
        while v != 1:
            v = int(self._parents[v - 2])
            d += 1
        return d

    def height(self) -> int:
        if self.n == 1:
            return 0
        return int(self.depths().max())

    def distance(self, i: int, j: int) -> int:
        """Edge count of the unique path between distinct nodes i and j."""
        self._check_node(i)
        self._check_node(j)
        if i == j:
            raise TreeError("distance requires two distinct nodes")
        anc = {}
        v, d = i, 0
        while True:
            anc[v] = d
            if v == 1:
                break
            v = int(self._parents[v - 2])
            d += 1
        v, d = j, 0
        while v not in anc:
            v = int(self._parents[v - 2])
            d += 1
        return d + anc[v]

    def outdegree(self, v: int) -> int:
        self._check_node(v)
        return int(np.count_nonzero(self._parents == v))

    def degree(self, v: int) -> int:
        """Total degree: children plus the parent edge (none for the root)."""
        return self.outdegree(v) + (0 if v == 1 else 1)

    def max_degree(self) -> int:
        if self.n == 1:
            return 0
        counts = np.bincount(self._parents, minlength=self.n + 1)
        counts[2:] += 1  # parent edge of every non-root node
        return int(counts[1:].max())

    def max_outdegree(self) -> int:
        if self.n == 1:
            return 0
        return int(np.bincount(self._parents, minlength=self.n + 1).max())

    def branch_size_histogram(self) -> Dict[int, int]:
        """Map m -> number of root branches with exactly m nodes."""
        sizes = self._branch_sizes()
        return dict(Counter(sizes.values()))

    def largest_branch(self) -> int:
        """Node count of the largest root branch."""
        if self.n == 1:
            return 0
        return max(self._branch_sizes().values())

    def _branch_sizes(self) -> Dict[int, int]:
        par = self._parents
        label = np.zeros(self.n + 1, dtype=np.int64)
        sizes: Counter = Counter()
        for j in range(2, self.n + 1):
            p = par[j - 2]
            label[j] = j if p == 1 else label[p]
            sizes[int(label[j])] += 1
        return dict(sizes)

    def descendant_counts(self) -> np.ndarray:
        """Number of descendants of every node; index v-1 is for node v."""
        sizes = np.ones(self.n + 1, dtype=np.int64)
        par = self._parents
        for j in range(self.n, 1, -1):
            sizes[par[j - 2]] += sizes[j]
        return sizes[1:] - 1

    def nodes_with_at_least_k(self, k: int) -> int:
        if k < 0:
            raise TreeError(f"k must be >= 0, got {k}")
        return int(np.count_nonzero(self.descendant_counts() >= k))

    def nodes_with_exactly_k(self, k: int) -> int:
        if k < 0:
            raise TreeError(f"k must be >= 0, got {k}")
        return int(np.count_nonzero(self.descendant_counts() == k))

    def _check_node(self, v: int) -> None:
        if not 1 <= v <= self.n:
            raise TreeError(f"node {v} out of range [1, {self.n}]")

    # -- serialization -----------------------------------------------------

    def to_text(self) -> str:
        """Canonical text form: a line with n, then one ``j parent`` line per
        node j = 2..n; newline-terminated."""
        lines = [str(self.n)]
        lines.extend(f"{j} {int(self._parents[j - 2])}" for j in range(2, self.n + 1))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RecursiveTree":
        tokens = text.split()
        if not tokens:
            raise TreeError("empty tree text")
        try:
            n = int(tokens[0])
            pairs = [int(t) for t in tokens[1:]]
        except ValueError as exc:
            raise TreeError(f"bad tree text: {exc}") from exc
        if len(pairs) != 2 * (n - 1):
            raise TreeError(
                f"expected {2 * (n - 1)} integers after n={n}, got {len(pairs)}"
            )
        mapping = {pairs[2 * i]: pairs[2 * i + 1] for i in range(n - 1)}
        return cls.from_parent_map(n, mapping)
