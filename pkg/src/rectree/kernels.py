"""Numba batch kernels for tree statistics at Monte Carlo scale.

Each kernel processes a (B, n-1) int64 batch of parent arrays (row b,
column j-2 holds parent(j)) or shuffle words, sequentially per row, and is
cross-checked in the test suite against the plain implementations in
:mod:`rectree.trees`.  ``nogil`` lets the harness run rows on a thread
pool; results are written by replicate index, so worker count never
changes the output.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def word_to_parents_batch(words: np.ndarray) -> np.ndarray:
    """Tree of each word row: attach to the rightmost smaller left entry."""
    B, m = words.shape
    parents = np.empty((B, m), np.int64)
    stack = np.empty(m, np.int64)
    for b in range(B):
        top = -1
        for pos in range(m):
            value = words[b, pos]
            while top >= 0 and stack[top] > value:
                top -= 1
            parents[b, value - 2] = stack[top] if top >= 0 else 1
            top += 1
            stack[top] = value
    return parents


@njit(cache=True, nogil=True)
def height_batch(parents: np.ndarray) -> np.ndarray:
    B, m = parents.shape
    out = np.empty(B, np.int64)
    depth = np.empty(m + 2, np.int64)
    for b in range(B):
        depth[1] = 0
        best = 0
        for j in range(2, m + 2):
            d = depth[parents[b, j - 2]] + 1
            depth[j] = d
            if d > best:
                best = d
        out[b] = best
    return out


@njit(cache=True, nogil=True)
def depth_node_batch(parents: np.ndarray, v: int) -> np.ndarray:
    """Depth of one node per row, by walking the parent chain."""
    B = parents.shape[0]
    out = np.empty(B, np.int64)
    for b in range(B):
        node = v
        d = 0
        while node != 1:
            node = parents[b, node - 2]
            d += 1
        out[b] = d
    return out


@njit(cache=True, nogil=True)
def leaves_batch(parents: np.ndarray) -> np.ndarray:
    B, m = parents.shape
    out = np.empty(B, np.int64)
    seen = np.zeros(m + 2, np.bool_)
    for b in range(B):
        internal = 0
        for j in range(m):
            p = parents[b, j]
            if not seen[p]:
                seen[p] = True
                internal += 1
        out[b] = m + 1 - internal
        for j in range(m):
            seen[parents[b, j]] = False
    return out


@njit(cache=True, nogil=True)
def y_ge_k_batch(parents: np.ndarray, k: int) -> np.ndarray:
    """Number of nodes with at least k descendants, per row."""
    B, m = parents.shape
    n = m + 1
    out = np.empty(B, np.int64)
    size = np.empty(n + 1, np.int64)
    for b in range(B):
        for j in range(1, n + 1):
            size[j] = 1
        for j in range(n, 1, -1):
            size[parents[b, j - 2]] += size[j]
        count = 0
        for j in range(1, n + 1):
            if size[j] - 1 >= k:
                count += 1
        out[b] = count
    return out


@njit(cache=True, nogil=True)
def largest_branch_batch(parents: np.ndarray) -> np.ndarray:
    B, m = parents.shape
    n = m + 1
    out = np.empty(B, np.int64)
    label = np.empty(n + 1, np.int64)
    count = np.zeros(n + 1, np.int64)
    for b in range(B):
        for j in range(2, n + 1):
            p = parents[b, j - 2]
            label[j] = j if p == 1 else label[p]
        best = 0
        for j in range(2, n + 1):
            count[label[j]] += 1
        for j in range(2, n + 1):
            c = count[label[j]]
            if c > best:
                best = c
            count[label[j]] = 0
        out[b] = best
    return out


def warmup() -> None:
    """Compile every kernel on a tiny batch (the compilations are cached)."""
    parents = np.array([[1, 1, 2]], dtype=np.int64)
    words = np.array([[3, 2, 4]], dtype=np.int64)
    word_to_parents_batch(words)
    height_batch(parents)
    depth_node_batch(parents, 4)
    leaves_batch(parents)
    y_ge_k_batch(parents, 1)
    largest_branch_batch(parents)
