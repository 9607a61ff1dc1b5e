"""Coupling constructions that turn one random tree into another.

Relocation couplings move a node (with its whole subtree) to a new parent;
in the parent-array representation that is a single entry update, which
makes the required independence structural: the decision functions below
see only (j, current parent, weights, fresh uniforms), never the tree.

The merge and split couplings rebuild a target tree from a uniform or
Hoppe source by joining groups of nodes into one or splitting the root
into a small weighted tree.
"""

from __future__ import annotations

import itertools
from typing import Callable, List, Tuple

import numpy as np

from .exact import ExactDistribution, enumerate_trees, wrt_tree_pmf
from .samplers import GuardError, sample_wrt, wrt_parents
from .trees import RecursiveTree
from .weights import WeightSequence

_TOL = 1e-12


# -- relocation decisions (pure in indices, weights and uniforms) ------------


def wrt_relocation_outcomes(
    j: int, parent: int, weights: WeightSequence
) -> List[Tuple[int, float]]:
    """Possible new parents of node j with their probabilities.

    Nodes sitting below a parent of below-average weight relocate with
    probability (S - (j-1) w_parent)/S to an above-average node, chosen
    with probability proportional to (j-1) w - S.  Weights within 1e-12
    of the average neither send nor receive.
    """
    if j < 3:
        return [(parent, 1.0)]
    total = weights.prefix(j - 1)
    avg = total / (j - 1)
    tol = _TOL * max(1.0, avg)
    w_par = weights.weight(parent)
    if w_par >= avg - tol:
        return [(parent, 1.0)]
    r = (total - (j - 1) * w_par) / total
    targets = []
    norm = 0.0
    for dest in range(1, j):
        excess = (j - 1) * weights.weight(dest) - total
        if excess > tol * (j - 1):
            targets.append((dest, excess))
            norm += excess
    if not targets:
        raise AssertionError(
            "relocation requested but no above-average destination exists"
        )
    outcomes = [(parent, 1.0 - r)]
    outcomes.extend((dest, r * excess / norm) for dest, excess in targets)
    return outcomes


def theta_k_relocation_outcomes(
    j: int, parent: int, theta: float, k: int
) -> List[Tuple[int, float]]:
    """Relocation rule of the theta^k special case.

    Nothing moves for the first k+1 nodes or at theta == 1.  For theta < 1
    nodes leave the first k parents for a uniform node in (k, j-1]; for
    theta > 1 they leave parents above k for a uniform node in [1, k].
    """
    if theta <= 0 or k < 1:
        raise GuardError(f"need theta > 0, k >= 1; got theta={theta}, k={k}")
    if j <= k + 1 or theta == 1.0:
        return [(parent, 1.0)]
    denom = k * theta + j - k - 1.0
    if theta < 1.0 and parent <= k:
        r = (denom - theta * (j - 1.0)) / denom
        share = r / (j - 1 - k)
        return [(parent, 1.0 - r)] + [(d, share) for d in range(k + 1, j)]
    if theta > 1.0 and parent > k:
        r = k * (theta - 1.0) / denom
        share = r / k
        return [(parent, 1.0 - r)] + [(d, share) for d in range(1, k + 1)]
    return [(parent, 1.0)]


def _pick(outcomes: List[Tuple[int, float]], u: float) -> int:
    acc = 0.0
    for dest, prob in outcomes:
        acc += prob
        if u < acc:
            return dest
    return outcomes[-1][0]


# -- sampled couplings -------------------------------------------------------


def couple_urt_to_wrt(
    source: RecursiveTree, weights: WeightSequence, rng: np.random.Generator
) -> Tuple[RecursiveTree, RecursiveTree]:
    """Relocate nodes of a URT sample so the result has the WRT law."""
    n = source.n
    u = rng.random((max(n - 1, 1), 2))
    derived = np.array(source.parents)
    for j in range(2, n + 1):
        outcomes = wrt_relocation_outcomes(j, source.parent(j), weights)
        if len(outcomes) > 1 and u[j - 2, 0] < 1.0 - outcomes[0][1]:
            derived[j - 2] = _pick(outcomes[1:],
                                   u[j - 2, 1] * (1.0 - outcomes[0][1]))
    return source, RecursiveTree(derived)


def couple_urt_to_theta_k(
    source: RecursiveTree, theta: float, k: int, rng: np.random.Generator
) -> Tuple[RecursiveTree, RecursiveTree]:
    """Relocate nodes of a URT sample so the result has the theta^k law."""
    n = source.n
    u = rng.random((max(n - 1, 1), 2))
    derived = np.array(source.parents)
    for j in range(2, n + 1):
        outcomes = theta_k_relocation_outcomes(j, source.parent(j), theta, k)
        if len(outcomes) > 1 and u[j - 2, 0] < 1.0 - outcomes[0][1]:
            derived[j - 2] = _pick(outcomes[1:],
                                   u[j - 2, 1] * (1.0 - outcomes[0][1]))
    return source, RecursiveTree(derived)


def merge_coupling_m_k(source: RecursiveTree, m: int, k: int) -> RecursiveTree:
    """Deterministically merge a URT on mk + n - k nodes into an m^k tree.

    The first km source nodes collapse m at a time into the k heavy nodes;
    every later node shifts down by k(m-1).
    """
    if m < 1 or k < 1:
        raise GuardError(f"need m >= 1 and k >= 1, got m={m}, k={k}")
    n = source.n - k * (m - 1)
    if n < max(k, 1):
        raise GuardError(
            f"source of size {source.n} is too small for m={m}, k={k}"
        )

    def node_of(p: int) -> int:
        return (p - 1) // m + 1 if p <= k * m else p - k * (m - 1)

    parents = np.empty(n - 1, dtype=np.int64)
    for j in range(2, k + 1):
        parents[j - 2] = node_of(source.parent((j - 1) * m + 1))
    for j in range(k + 1, n + 1):
        parents[j - 2] = node_of(source.parent(j + k * (m - 1)))
    return RecursiveTree(parents)


def merge_coupling_source_size(m: int, k: int, n: int) -> int:
    return m * k + n - k


def inverse_merge_coupling_1_over_m(source: RecursiveTree, m: int, k: int) -> RecursiveTree:
    """Deterministically merge a URT on k + (n-k)m nodes into a (1/m)^k tree.

    The first k source nodes stay; every later group of m nodes collapses
    into one, which is equivalent to giving the first k nodes weight 1/m.
    """
    if m < 1 or k < 1:
        raise GuardError(f"need m >= 1 and k >= 1, got m={m}, k={k}")
    if (source.n - k) % m != 0:
        raise GuardError(
            f"source size {source.n} does not match k + (n-k)m for k={k}, m={m}"
        )
    n = k + (source.n - k) // m
    if n < k + 1:
        raise GuardError(f"derived size {n} must exceed k={k}")

    def node_of(p: int) -> int:
        return p if p <= k else k + (p - k - 1) // m + 1

    parents = np.empty(n - 1, dtype=np.int64)
    for j in range(2, k + 1):
        parents[j - 2] = source.parent(j)
    for j in range(k + 1, n + 1):
        parents[j - 2] = node_of(source.parent(k + (j - k - 1) * m + 1))
    return RecursiveTree(parents)


def inverse_merge_source_size(m: int, k: int, n: int) -> int:
    return k + (n - k) * m


def split_coupling_hoppe(
    weights: WeightSequence, k: int, n: int, rng: np.random.Generator
) -> Tuple[RecursiveTree, RecursiveTree]:
    """Split the root of a Hoppe tree into a size-k weighted tree.

    Requires w_i == 1 for all i > k.  Returns (hoppe source on n-k+1 nodes
    with theta = S_k, derived WRT on n nodes).  Former root children
    re-attach to node j <= k with probability w_j / S_k.
    """
    if k < 1 or n < k:
        raise GuardError(f"need 1 <= k <= n, got k={k}, n={n}")
    if abs(weights.weight(k + 1) - 1.0) > _TOL or abs(weights.weight(n + 1) - 1.0) > _TOL:
        raise GuardError("split coupling needs weight 1 for every node past k")
    theta = weights.prefix(k)
    source = sample_wrt(WeightSequence.hoppe(theta), n - k + 1, rng)
    small = wrt_parents(weights, k, rng)
    share = np.array([weights.weight(i) / theta for i in range(1, k + 1)])
    cumshare = np.cumsum(share)
    u = rng.random(max(source.n - 1, 1))

    parents = np.empty(n - 1, dtype=np.int64)
    parents[: k - 1] = small
    for i in range(2, source.n + 1):
        p = source.parent(i)
        if p == 1:
            target = int(np.searchsorted(cumshare, u[i - 2], side="right")) + 1
            parents[i + k - 3] = min(target, k)
        else:
            parents[i + k - 3] = p + k - 1
    return source, RecursiveTree(parents)


# -- exact marginal laws by joint enumeration --------------------------------


def _expand_coupling(
    n: int,
    outcomes_fn: Callable[[int, int], List[Tuple[int, float]]],
    guard: int = 9,
) -> ExactDistribution:
    """Law of the derived tree: uniform source x relocation randomness."""
    sources = enumerate_trees(n, guard)
    base = 1.0 / len(sources)
    pairs = []

    def rec(tree: RecursiveTree, j: int, parents: list, prob: float) -> None:
        if j > n:
            pairs.append((tuple(parents), prob))
            return
        for dest, p in outcomes_fn(j, tree.parent(j)):
            if p > 0.0:
                parents.append(dest)
                rec(tree, j + 1, parents, prob * p)
                parents.pop()

    for tree in sources:
        rec(tree, 2, [], base)
    return ExactDistribution.from_pairs(pairs)


def wrt_coupling_pmf(weights: WeightSequence, n: int) -> ExactDistribution:
    return _expand_coupling(n, lambda j, par: wrt_relocation_outcomes(j, par, weights))


def theta_k_coupling_pmf(theta: float, k: int, n: int) -> ExactDistribution:
    return _expand_coupling(
        n, lambda j, par: theta_k_relocation_outcomes(j, par, theta, k)
    )


def merge_coupling_pmf(m: int, k: int, n: int) -> ExactDistribution:
    source_n = merge_coupling_source_size(m, k, n)
    sources = enumerate_trees(source_n)
    base = 1.0 / len(sources)
    return ExactDistribution.from_pairs(
        (merge_coupling_m_k(t, m, k).key(), base) for t in sources
    )


def inverse_merge_coupling_pmf(m: int, k: int, n: int) -> ExactDistribution:
    source_n = inverse_merge_source_size(m, k, n)
    sources = enumerate_trees(source_n)
    base = 1.0 / len(sources)
    return ExactDistribution.from_pairs(
        (inverse_merge_coupling_1_over_m(t, m, k).key(), base) for t in sources
    )


def split_coupling_pmf(weights: WeightSequence, k: int, n: int) -> ExactDistribution:
    """Exact derived law: Hoppe source x small tree x reattachment choices."""
    if abs(weights.weight(k + 1) - 1.0) > _TOL:
        raise GuardError("split coupling needs weight 1 for every node past k")
    theta = weights.prefix(k)
    hoppe = wrt_tree_pmf(WeightSequence.hoppe(theta), n - k + 1)
    small = wrt_tree_pmf(weights, k) if k >= 2 else ExactDistribution([()], [1.0])
    share = [weights.weight(i) / theta for i in range(1, k + 1)]

    pairs = []
    for skey, sprob in zip(small.support, small.mass):
        for hkey, hprob in zip(hoppe.support, hoppe.mass):
            htree = RecursiveTree(hkey)
            root_children = [i for i in range(2, htree.n + 1) if htree.parent(i) == 1]
            for assignment in itertools.product(range(1, k + 1), repeat=len(root_children)):
                prob = sprob * hprob
                for target in assignment:
                    prob *= share[target - 1]
                parents = list(skey)
                targets = dict(zip(root_children, assignment))
                for i in range(2, htree.n + 1):
                    p = htree.parent(i)
                    parents.append(targets[i] if p == 1 else p + k - 1)
                pairs.append((tuple(parents), prob))
    return ExactDistribution.from_pairs(pairs)
