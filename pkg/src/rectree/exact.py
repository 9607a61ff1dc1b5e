"""Ground-truth distributions by exhaustive enumeration.

Supports two enumeration engines: all (n-1)! increasing trees with
model-specific probabilities, and all a^(n-1) digit vectors (or pile
cuts and interleavings) for shuffle-based trees.  Results are
``ExactDistribution`` objects keyed by canonical tree tuples or by
statistic values.
"""

from __future__ import annotations

import itertools
import math
from typing import Callable, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .perms import WordPermutation, tree_from_word
from .samplers import GuardError, ShuffleParams, pile_size_pmf
from .trees import RecursiveTree
from .weights import WeightSequence

TREE_GUARD_N = 9
DIGIT_GUARD = 10**7


class ExactDistribution:
    """A finite pmf over hashable support points."""

    __slots__ = ("support", "mass")

    def __init__(self, support: Sequence, mass: Sequence[float]):
        if len(support) != len(mass):
            raise GuardError("support and mass must have equal length")
        if len(set(support)) != len(support):
            raise GuardError("support entries must be distinct")
        m = np.asarray(mass, dtype=np.float64)
        if np.any(m < -1e-15):
            raise GuardError("probability mass must be nonnegative")
        if abs(float(m.sum()) - 1.0) > 1e-12:
            raise GuardError(f"mass must sum to 1, got {m.sum()!r}")
        self.support = list(support)
        self.mass = np.maximum(m, 0.0)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[object, float]]) -> "ExactDistribution":
        acc: Dict[object, float] = {}
        for key, prob in pairs:
            acc[key] = acc.get(key, 0.0) + prob
        keys = sorted(acc, key=repr)
        return cls(keys, [acc[k] for k in keys])

    def as_dict(self) -> Dict[object, float]:
        return dict(zip(self.support, self.mass))

    def probability(self, key) -> float:
        try:
            return float(self.mass[self.support.index(key)])
        except ValueError:
            return 0.0

    def moments(self) -> Tuple[float, float]:
        """(mean, variance) for numeric support."""
        values = np.asarray(self.support, dtype=np.float64)
        mean = float((values * self.mass).sum())
        var = float(((values - mean) ** 2 * self.mass).sum())
        return mean, var

    def tv(self, other: "ExactDistribution") -> float:
        """Total variation distance (1/2) sum |p - q| over the joint support."""
        mine = self.as_dict()
        theirs = other.as_dict()
        keys = set(mine) | set(theirs)
        return float(
            0.5 * sum(abs(mine.get(k, 0.0) - theirs.get(k, 0.0)) for k in keys)
        )

    def map_support(self, fn: Callable) -> "ExactDistribution":
        return ExactDistribution.from_pairs(
            (fn(key), float(p)) for key, p in zip(self.support, self.mass)
        )

    def __len__(self) -> int:
        return len(self.support)


def enumerate_trees(n: int, guard: int = TREE_GUARD_N) -> List[RecursiveTree]:
    """All (n-1)! increasing trees on n nodes, as parent arrays."""
    if not 1 <= n <= guard:
        raise GuardError(f"tree enumeration supports 1 <= n <= {guard}, got {n}")
    trees = []
    for parents in itertools.product(*(range(1, j) for j in range(2, n + 1))):
        trees.append(RecursiveTree(parents))
    return trees


def urt_tree_pmf(n: int, guard: int = TREE_GUARD_N) -> ExactDistribution:
    trees = enumerate_trees(n, guard)
    mass = [1.0 / len(trees)] * len(trees)
    return ExactDistribution([t.key() for t in trees], mass)


def wrt_tree_pmf(
    weights: WeightSequence, n: int, guard: int = TREE_GUARD_N
) -> ExactDistribution:
    """P(tree) = prod_j w_parent(j) / S_(j-1)."""
    trees = enumerate_trees(n, guard)
    mass = []
    for t in trees:
        prob = 1.0
        for j in range(2, n + 1):
            prob *= weights.weight(t.parent(j)) / weights.prefix(j - 1)
        mass.append(prob)
    return ExactDistribution([t.key() for t in trees], mass)


def brt_word_pmf(
    params: ShuffleParams, n: int, guard: int = DIGIT_GUARD
) -> ExactDistribution:
    """Word law of a p-biased riffle shuffle via all digit vectors."""
    if n < 2:
        raise GuardError(f"shuffle enumeration needs n >= 2, got {n}")
    count = params.a ** (n - 1)
    if count > guard:
        raise GuardError(f"{params.a}^{n - 1} = {count} digit vectors exceed guard {guard}")
    from .samplers import DigitAssignment, shuffle_from_digits

    pairs = []
    for digits in itertools.product(range(1, params.a + 1), repeat=n - 1):
        prob = math.prod(params.p[d - 1] for d in digits)
        word = shuffle_from_digits(DigitAssignment(digits, params.a))
        pairs.append((word.word, prob))
    return ExactDistribution.from_pairs(pairs)


def brt_word_pmf_cut_riffle(params: ShuffleParams, n: int) -> ExactDistribution:
    """Word law by the physical mechanism: multinomial cut of the deck into
    consecutive piles, then a uniformly random interleaving of the piles."""
    if n < 2:
        raise GuardError(f"shuffle enumeration needs n >= 2, got {n}")
    deck = n - 1
    pairs = []
    for sizes in _compositions(deck, params.a):
        cut_prob = pile_size_pmf(params, deck, sizes)
        if cut_prob == 0.0:
            continue
        piles = []
        start = 2
        for b in sizes:
            piles.append(list(range(start, start + b)))
            start += b
        interleavings = list(_multiset_arrangements(sizes))
        share = cut_prob / len(interleavings)
        for origin in interleavings:
            taken = [0] * params.a
            word = []
            for s in origin:
                word.append(piles[s][taken[s]])
                taken[s] += 1
            pairs.append((tuple(word), share))
    return ExactDistribution.from_pairs(pairs)


def brt_tree_pmf(
    params: ShuffleParams, n: int, guard: int = DIGIT_GUARD
) -> ExactDistribution:
    """Push-forward of the digit measure through word -> tree."""
    word_pmf = brt_word_pmf(params, n, guard)
    return word_pmf.map_support(
        lambda w: tree_from_word(WordPermutation(w)).key()
    )


def brt_tree_pmf_cut_riffle(params: ShuffleParams, n: int) -> ExactDistribution:
    word_pmf = brt_word_pmf_cut_riffle(params, n)
    return word_pmf.map_support(
        lambda w: tree_from_word(WordPermutation(w)).key()
    )


def _compositions(total: int, parts: int):
    """All vectors of `parts` nonnegative integers summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multiset_arrangements(sizes: Sequence[int]):
    """Distinct arrangements of the multiset {s repeated sizes[s] times}."""
    counts = list(sizes)
    total = sum(counts)

    def rec(prefix):
        if len(prefix) == total:
            yield tuple(prefix)
            return
        for s, c in enumerate(counts):
            if c > 0:
                counts[s] -= 1
                prefix.append(s)
                yield from rec(prefix)
                prefix.pop()
                counts[s] += 1

    yield from rec([])


# -- statistics ---------------------------------------------------------------

StatFn = Callable[[RecursiveTree], Union[int, float]]


def statistic_fn(stat: Union[str, StatFn]) -> StatFn:
    """Resolve a statistic selector (callable or CLI name) to a function."""
    if callable(stat):
        return stat
    name, _, arg = str(stat).partition(":")
    name = name.strip().lower()
    if name == "leaves":
        return lambda t: t.leaves()
    if name == "branches":
        return lambda t: t.branches()
    if name in ("depth", "depth_n"):
        return lambda t: t.depth(t.n)
    if name == "height":
        return lambda t: t.height()
    if name == "max_degree":
        return lambda t: t.max_degree()
    if name == "largest_branch":
        return lambda t: t.largest_branch()
    if name in ("y_ge", "kdesc"):
        k = int(arg)
        return lambda t: t.nodes_with_at_least_k(k)
    if name in ("x_eq", "exactk"):
        k = int(arg)
        return lambda t: t.nodes_with_exactly_k(k)
    raise GuardError(f"unknown statistic {stat!r}")


def statistic_pmf(dist: ExactDistribution, stat: Union[str, StatFn]) -> ExactDistribution:
    """Exact push-forward of a tree pmf through a statistic."""
    fn = statistic_fn(stat)
    return dist.map_support(lambda key: fn(RecursiveTree(key)))


def moments(dist: ExactDistribution) -> Tuple[float, float]:
    return dist.moments()


def tree_pmf_for_model(model: str, n: int, *, weights=None, params=None,
                       theta=None, k=None) -> ExactDistribution:
    """Dispatch helper used by the service and the Monte Carlo harness."""
    model = model.lower()
    if model == "urt":
        return urt_tree_pmf(n)
    if model == "wrt":
        if weights is None:
            raise GuardError("wrt enumeration needs a weight sequence")
        return wrt_tree_pmf(weights, n)
    if model == "hoppe":
        if theta is None:
            raise GuardError("hoppe enumeration needs theta")
        return wrt_tree_pmf(WeightSequence.hoppe(theta), n)
    if model == "thetak":
        if theta is None or k is None:
            raise GuardError("thetak enumeration needs theta and k")
        return wrt_tree_pmf(WeightSequence.theta_k(theta, k), n)
    if model in ("brt", "art"):
        if params is None:
            raise GuardError("brt enumeration needs shuffle parameters")
        return brt_tree_pmf(params, n)
    raise GuardError(f"unknown model {model!r}")
