"""Seeded samplers for URT, WRT, Hoppe, theta-k and riffle-shuffle models.

Every sampler consumes a ``numpy.random.Generator`` (see :mod:`rectree.rng`
for reproducible streams) and draws a fixed, documented amount of
randomness: one uniform per attachment step, one per digit, and so on.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .trees import RecursiveTree
from .perms import WordPermutation
from .weights import WeightSequence, WeightError


class GuardError(ValueError):
    """A computational guard was exceeded (problem size, overflow horizon)."""


class ShuffleParams:
    """Pile count a and pile probability vector p for p-biased riffle shuffles.

    Zero entries are dropped on construction (the induced shuffle law is
    unchanged), so p_1 > 0 always holds afterwards.
    """

    __slots__ = ("a", "p")

    def __init__(self, p: Sequence[float]):
        vec = np.asarray(list(p), dtype=np.float64)
        if vec.size == 0:
            raise WeightError("probability vector must not be empty")
        if np.any(vec < 0):
            raise WeightError("pile probabilities must be nonnegative")
        if abs(float(vec.sum()) - 1.0) > 1e-12:
            raise WeightError(f"pile probabilities must sum to 1, got {vec.sum()!r}")
        vec = vec[vec > 0.0]
        self.p = tuple(float(x) for x in vec)
        self.a = len(self.p)

    @classmethod
    def uniform(cls, a: int) -> "ShuffleParams":
        if a < 1:
            raise WeightError(f"pile count must be >= 1, got {a}")
        return cls([1.0 / a] * a)

    def prefix(self) -> np.ndarray:
        """P_s = p_1 + ... + p_s for s = 1..a."""
        return np.cumsum(self.p)

    def describe(self) -> str:
        return "p=(" + ",".join(f"{x:g}" for x in self.p) + ")"

    def __eq__(self, other) -> bool:
        return isinstance(other, ShuffleParams) and self.p == other.p

    def __repr__(self) -> str:  # pragma: no cover
        return f"ShuffleParams({self.describe()})"


class DigitAssignment:
    """I.i.d. digits X_2..X_n in [1, a] driving an inverse riffle shuffle."""

    __slots__ = ("a", "digits")

    def __init__(self, digits: Sequence[int], a: int):
        arr = np.asarray(list(digits) if not isinstance(digits, np.ndarray) else digits,
                         dtype=np.int64)
        if arr.size and (arr.min() < 1 or arr.max() > a):
            raise WeightError(f"digits must lie in [1, {a}]")
        arr.setflags(write=False)
        self.a = a
        self.digits = arr

    @property
    def n(self) -> int:
        return self.digits.size + 1


# -- weighted attachment ---------------------------------------------------


def wrt_parents(weights: WeightSequence, n: int, rng: np.random.Generator) -> np.ndarray:
    """Parent array of a WRT sample; one uniform drives each node j = 2..n."""
    if n < 1:
        raise GuardError(f"n must be >= 1, got {n}")
    if n == 1:
        return np.empty(0, dtype=np.int64)
    u = rng.random(n - 1)
    if weights.tag == "geom" and weights.params["a"] > 1.0:
        return _geometric_parents(weights.params["a"], n, u)
    prefix = weights.prefix_array(n - 1)
    if not np.all(np.isfinite(prefix)):
        horizon = int(np.argmax(~np.isfinite(prefix))) + 1
        raise GuardError(
            f"prefix sums of {weights.describe()} overflow at node {horizon}; "
            f"largest supported n is {horizon}"
        )
    if prefix[0] <= 0 or np.any(np.diff(prefix) < 0):
        raise WeightError("prefix sums must be positive and nondecreasing")
    targets = u * prefix  # node j draws in [0, S_{j-1})
    parents = np.searchsorted(prefix, targets, side="right").astype(np.int64) + 1
    return np.minimum(parents, np.arange(1, n, dtype=np.int64))


def _geometric_parents(a: float, n: int, u: np.ndarray) -> np.ndarray:
    # Exact inverse CDF in log space: P(parent <= i | j) = (a^i - 1)/(a^(j-1) - 1).
    # Works arbitrarily far past the float overflow horizon of the prefix sums
    # because only ratios of consecutive prefix sums enter.
    j1 = np.arange(1, n, dtype=np.float64)  # j - 1 for j = 2..n
    ln_a = math.log(a)
    x = (j1 * ln_a + np.log(u + (1.0 - u) * np.exp(-j1 * ln_a))) / ln_a
    parents = np.floor(x).astype(np.int64) + 1
    return np.clip(parents, 1, np.arange(1, n, dtype=np.int64))


def sample_wrt(weights: WeightSequence, n: int, rng: np.random.Generator) -> RecursiveTree:
    """WRT sample: node j attaches to i < j with probability w_i / S_{j-1}."""
    return RecursiveTree(wrt_parents(weights, n, rng))


def urt_parents(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise GuardError(f"n must be >= 1, got {n}")
    if n == 1:
        return np.empty(0, dtype=np.int64)
    sizes = np.arange(1, n, dtype=np.float64)
    parents = np.floor(rng.random(n - 1) * sizes).astype(np.int64) + 1
    return np.minimum(parents, np.arange(1, n, dtype=np.int64))


def sample_urt(n: int, rng: np.random.Generator) -> RecursiveTree:
    """Uniform recursive tree: node j attaches uniformly among 1..j-1."""
    return RecursiveTree(urt_parents(n, rng))


def sample_hoppe(theta: float, n: int, rng: np.random.Generator) -> RecursiveTree:
    return sample_wrt(WeightSequence.hoppe(theta), n, rng)


def sample_theta_k(theta: float, k: int, n: int, rng: np.random.Generator) -> RecursiveTree:
    return sample_wrt(WeightSequence.theta_k(theta, k), n, rng)


# -- riffle shuffles ---------------------------------------------------------


def sample_digits(params: ShuffleParams, n: int, rng: np.random.Generator) -> DigitAssignment:
    """I.i.d. digits with P(X = s) = p_s for the cards 2..n."""
    if n < 1:
        raise GuardError(f"n must be >= 1, got {n}")
    cum = params.prefix()
    digits = np.searchsorted(cum, rng.random(n - 1), side="right") + 1
    return DigitAssignment(np.minimum(digits, params.a), params.a)


def shuffle_from_digits(d: DigitAssignment) -> WordPermutation:
    """Word of the shuffle: the inverse of stable-sorting the cards by digit.

    Stable sort is the definition of an inverse riffle shuffle: ties keep
    the original card order.
    """
    order = np.argsort(d.digits, kind="stable")
    word = np.empty(d.n - 1, dtype=np.int64)
    word[order] = np.arange(2, d.n + 1)
    return WordPermutation(word)


def sample_shuffle(params: ShuffleParams, n: int, rng: np.random.Generator) -> WordPermutation:
    """p-biased riffle shuffle of {2..n} via the digit construction."""
    return shuffle_from_digits(sample_digits(params, n, rng))


def sample_brt(params: ShuffleParams, n: int, rng: np.random.Generator) -> RecursiveTree:
    """Biased recursive tree: the tree of a p-biased riffle shuffle word."""
    from .perms import tree_from_word

    if n < 2:
        raise GuardError(f"BRT sampling needs n >= 2, got {n}")
    tree = tree_from_word(sample_shuffle(params, n, rng))
    # Children of any node arrive in decreasing order and must come from
    # distinct piles, so no node can exceed out-degree a.
    assert tree.max_outdegree() <= params.a, "shuffle tree exceeded pile bound"
    return tree


def multinomial_cut(params: ShuffleParams, deck: int, rng: np.random.Generator) -> np.ndarray:
    """Pile sizes for a deck, by sequential binomial conditioning (exact)."""
    sizes = np.zeros(params.a, dtype=np.int64)
    remaining = deck
    mass_left = 1.0
    for s, ps in enumerate(params.p[:-1]):
        if remaining == 0:
            break
        q = min(max(ps / mass_left, 0.0), 1.0)
        b = int(rng.binomial(remaining, q))
        sizes[s] = b
        remaining -= b
        mass_left -= ps
    sizes[params.a - 1] += remaining
    return sizes


def pile_size_pmf(params: ShuffleParams, deck: int, sizes: Sequence[int]) -> float:
    """Multinomial probability of one pile-size vector for a deck of cards."""
    b = list(sizes)
    if len(b) != params.a or any(x < 0 for x in b) or sum(b) != deck:
        raise GuardError(f"pile sizes {b} do not partition a deck of {deck}")
    log_coeff = math.lgamma(deck + 1) - sum(math.lgamma(x + 1) for x in b)
    log_mass = sum(x * math.log(p) for x, p in zip(b, params.p) if x > 0)
    return math.exp(log_coeff + log_mass)


def sample_shuffle_by_cut_and_riffle(
    params: ShuffleParams, n: int, rng: np.random.Generator
) -> WordPermutation:
    """p-biased riffle shuffle by the physical mechanism: multinomial cut of
    the deck {2..n} into consecutive piles, then drop cards one by one with
    probability proportional to the remaining pile sizes."""
    if n < 1:
        raise GuardError(f"n must be >= 1, got {n}")
    deck = n - 1
    sizes = multinomial_cut(params, deck, rng)
    starts = 2 + np.concatenate(([0], np.cumsum(sizes)[:-1]))
    taken = np.zeros(params.a, dtype=np.int64)
    remaining = sizes.astype(np.float64).copy()
    word = []
    for _ in range(deck):
        total = remaining.sum()
        t = rng.random() * total
        s = int(np.searchsorted(np.cumsum(remaining), t, side="right"))
        s = min(s, params.a - 1)
        word.append(int(starts[s] + taken[s]))
        taken[s] += 1
        remaining[s] -= 1.0
    return WordPermutation(word)


def sample_brt_by_cut_and_riffle(
    params: ShuffleParams, n: int, rng: np.random.Generator
) -> RecursiveTree:
    from .perms import tree_from_word

    return tree_from_word(sample_shuffle_by_cut_and_riffle(params, n, rng))


def parse_shuffle(p: Optional[str] = None, a: Optional[int] = None) -> ShuffleParams:
    """Build ShuffleParams from CLI-style arguments (--p list or --a count)."""
    if (p is None) == (a is None):
        raise WeightError("exactly one of a probability list or a pile count is required")
    if a is not None:
        return ShuffleParams.uniform(int(a))
    return ShuffleParams([float(tok) for tok in str(p).split(",")])
