"""Closed-form expectations, variances, probabilities, bounds and limit
constants for the recursive-tree models, as pure numeric functions.

Conventions used throughout:

* ``n`` is the node count of the tree, ``S_i`` the weight prefix sum,
  ``P_s`` the pile-probability prefix sum and ``R_s = 1 - P_s`` its tail.
* powers ``base**m`` with ``0 <= base <= 1`` go through :func:`power01`,
  which short-circuits ``base == 0`` and evaluates ``exp(m * log(base))``
  otherwise, so no ``a**n``-style denominators ever appear;
* difference quotients ``(x^m - y^m)/(x - y)`` go through
  :func:`pow_diff_quotient`, which stays exact at and near ``x == y``.

Every public formula is registered in :data:`REGISTRY` under a stable
``family.stat.moment`` identifier so the service and CLI can address it.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np

from .samplers import GuardError, ShuffleParams
from .weights import WeightSequence

#: E[largest branch / n] for uniform recursive trees, as reported to 11 digits.
GOLOMB_DICKMAN = 0.62432998854


class HarmonicCache:
    """First and second order harmonic numbers with append-only growth."""

    def __init__(self) -> None:
        self._h = np.zeros(1, dtype=np.float64)
        self._h2 = np.zeros(1, dtype=np.float64)
        self._lock = threading.Lock()

    def _grow(self, n: int) -> None:
        with self._lock:
            have = self._h.size - 1
            if n <= have:
                return
            idx = np.arange(have + 1, n + 1, dtype=np.float64)
            self._h = np.concatenate([self._h, self._h[-1] + np.cumsum(1.0 / idx)])
            self._h2 = np.concatenate([self._h2, self._h2[-1] + np.cumsum(idx**-2)])

    def h(self, n: int) -> float:
        if n < 0:
            raise GuardError(f"harmonic number needs n >= 0, got {n}")
        if n >= self._h.size:
            self._grow(n)
        return float(self._h[n])

    def h2(self, n: int) -> float:
        if n < 0:
            raise GuardError(f"harmonic number needs n >= 0, got {n}")
        if n >= self._h2.size:
            self._grow(n)
        return float(self._h2[n])


_HARMONIC = HarmonicCache()


def harmonic(n: int) -> float:
    """H_n = sum_{i<=n} 1/i."""
    return _HARMONIC.h(n)


def harmonic2(n: int) -> float:
    """H_n^(2) = sum_{i<=n} 1/i^2."""
    return _HARMONIC.h2(n)


def power01(base: float, exponent: float) -> float:
    """base**exponent for base in [0, 1], stable as exp(m log base)."""
    if base < 0.0 or base > 1.0 + 1e-12:
        raise GuardError(f"power01 expects base in [0,1], got {base}")
    if exponent == 0:
        return 1.0
    if base == 0.0:
        return 0.0
    if base >= 1.0:
        return 1.0
    return math.exp(exponent * math.log(base))


def pow_diff_quotient(x: float, y: float, m: int) -> float:
    """(x^m - y^m)/(x - y) for x, y in [0, 1], exact in the limit x == y.

    Evaluated as sum_{t<m} x^t y^(m-1-t) by the nonnegative recurrence
    h_j = x h_(j-1) + y^j, which has no cancellation.
    """
    if m <= 0:
        return 0.0
    h = 1.0
    ypow = 1.0
    for _ in range(m - 1):
        ypow *= y
        h = x * h + ypow
    return h


def geom_sum(x: float, m: int) -> float:
    """sum_{t=0}^{m-1} x^t == (1 - x^m)/(1 - x), with the x == 1 limit."""
    return pow_diff_quotient(1.0, x, m)


# =============================================================================
# URT baselines
# =============================================================================


def urt_leaves_mean(n: int) -> float:
    return 0.0 if n < 2 else n / 2.0


def urt_leaves_var(n: int) -> float:
    return 0.0 if n < 3 else n / 12.0  # the two-node tree is deterministic


def urt_branches_mean(n: int) -> float:
    return harmonic(n - 1) if n >= 1 else 0.0


def urt_branches_var(n: int) -> float:
    return harmonic(n - 1) - harmonic2(n - 1) if n >= 1 else 0.0


def urt_depth_mean(n: int) -> float:
    """Depth of node n; equidistributed with the branch count."""
    return harmonic(n - 1) if n >= 1 else 0.0


def urt_depth_var(n: int) -> float:
    return harmonic(n - 1) - harmonic2(n - 1) if n >= 1 else 0.0


def urt_distance_mean(i: int, j: int) -> float:
    """E[distance(i, j)] for 1 <= i < j."""
    if not 1 <= i < j:
        raise GuardError(f"distance formula needs 1 <= i < j, got ({i}, {j})")
    return harmonic(i) + harmonic(j - 1) - 2.0 + 1.0 / i


def urt_distance_var(i: int, j: int) -> float:
    if not 1 <= i < j:
        raise GuardError(f"distance formula needs 1 <= i < j, got ({i}, {j})")
    return (
        harmonic(i)
        + harmonic(j - 1)
        - 3.0 * harmonic2(i)
        - harmonic2(j - 1)
        + 4.0
        - 4.0 * harmonic(i) / i
        + 3.0 / i
        - 1.0 / i**2
    )


def urt_kdesc_alpha(k: int) -> float:
    """Limit of X_k/n: fraction of nodes with exactly k descendants."""
    if k < 0:
        raise GuardError(f"k must be >= 0, got {k}")
    return 1.0 / ((k + 2.0) * (k + 1.0))


def urt_kdesc_sigma2(k: int) -> float:
    """Asymptotic variance of (X_k - n alpha_k)/sqrt(n)."""
    if k < 0:
        raise GuardError(f"k must be >= 0, got {k}")
    alpha = urt_kdesc_alpha(k)
    gamma = 1.0 / ((2 * k + 3.0) * (2 * k + 2.0) * (k + 1.0))
    return alpha * (1.0 - alpha) - 2.0 * (k + 1.0) * alpha**2 + 2.0 * gamma


def urt_branch_size_limit_rate(m: int) -> float:
    """Poisson rate of the count of size-m branches, as n grows."""
    if m < 1:
        raise GuardError(f"branch size must be >= 1, got {m}")
    return 1.0 / m


def urt_branch_size_tail_prob(m: int, n: int) -> float:
    """P(some branch has size m) == 1/m, valid for (n-1)/2 < m < n."""
    if not ((n - 1) / 2.0 < m < n):
        raise GuardError(f"tail probability needs (n-1)/2 < m < n, got m={m}, n={n}")
    return 1.0 / m


# =============================================================================
# WRT / Hoppe / theta-k
# =============================================================================


def wrt_branches_mean(weights: WeightSequence, n: int) -> float:
    """E[branches] = w_1 sum_{i=1}^{n-1} 1/S_i."""
    return weights.weight(1) * sum(1.0 / weights.prefix(i) for i in range(1, n))


def wrt_branches_var(weights: WeightSequence, n: int) -> float:
    """Var[branches] = w_1 sum_{i=2}^{n-1} (S_i - w_1)/S_i^2."""
    w1 = weights.weight(1)
    return w1 * sum(
        (weights.prefix(i) - w1) / weights.prefix(i) ** 2 for i in range(2, n)
    )


def wrt_depth_mean(weights: WeightSequence, n: int) -> float:
    """E[depth of node n] = sum_{i=1}^{n-1} w_i/S_i."""
    return sum(weights.weight(i) / weights.prefix(i) for i in range(1, n))


def wrt_depth_var(weights: WeightSequence, n: int) -> float:
    """Var[depth of node n] = sum_{i=2}^{n-1} w_i S_{i-1}/S_i^2."""
    return sum(
        weights.weight(i) * weights.prefix(i - 1) / weights.prefix(i) ** 2
        for i in range(2, n)
    )


def wrt_leaf_probability(weights: WeightSequence, i: int, n: int) -> float:
    """P(node i is a leaf at time n) = prod_{j>i} (1 - w_i/S_{j-1})."""
    if not 2 <= i <= n:
        raise GuardError(f"leaf probability needs 2 <= i <= n, got i={i}, n={n}")
    w = weights.weight(i)
    acc = 0.0
    for j in range(i + 1, n + 1):
        ratio = w / weights.prefix(j - 1)
        if ratio >= 1.0:
            return 0.0
        acc += math.log1p(-ratio)
    return math.exp(acc)


def wrt_leaves_mean(weights: WeightSequence, n: int) -> float:
    """E[leaves] as the sum of per-node leaf probabilities (O(n^2))."""
    if n < 2:
        return 0.0
    return sum(wrt_leaf_probability(weights, i, n) for i in range(2, n + 1))


def thetak_leaves_mean_exact(theta: float, k: int, n: int) -> float:
    """Exact E[leaves] of the theta^k tree (first k weights theta, rest 1)."""
    if theta <= 0 or k < 1:
        raise GuardError(f"need theta > 0 and k >= 1, got theta={theta}, k={k}")
    if n < 2:
        return 0.0
    if n <= k + 1:
        return n / 2.0  # all attachment steps are uniform up to node k+1
    prod = 1.0
    for i in range(1, n - k):
        prod *= (theta * (k - 1) + i) / (theta * k + i)
    shift = k * (theta - 1.0)
    return (
        n / 2.0
        + shift / 2.0
        + k * theta * (1.0 - k * theta) / (2.0 * (shift + n - 1.0))
        + (k - 1.0) / 2.0 * prod
    )


def hoppe_leaves_mean_exact(theta: float, n: int) -> float:
    return thetak_leaves_mean_exact(theta, 1, n)


def hoppe_leaves_mean_leading(theta: float, n: int) -> float:
    """Leading part n/2 + (theta-1)/2; the exact mean differs by O(1/n)."""
    return n / 2.0 + (theta - 1.0) / 2.0


def thetak_leaves_concentration_bound(theta: float, k: int, n: int, t: float) -> float:
    """Tail bound for |leaves - mean| >= t in a theta^k tree."""
    if t < 0:
        raise GuardError(f"t must be >= 0, got {t}")
    shift = k * (theta - 1.0)
    main = 2.0 * math.exp(-6.0 * t * t / (shift + n + 2.0))
    correction = math.exp(
        6.0 * t * k * theta * (k - 1.0) / ((shift + n - 1.0) * (shift + n + 2.0))
    )
    return main * correction


def hoppe_leaves_concentration_bound(theta: float, n: int, t: float) -> float:
    """Tail bound for |leaves - mean| >= t in a Hoppe tree."""
    if t < 0:
        raise GuardError(f"t must be >= 0, got {t}")
    return 2.0 * math.exp(-6.0 * t * t / (n + theta + 1.0))


def hoppe_branches_mean(theta: float, n: int) -> float:
    return wrt_branches_mean(WeightSequence.hoppe(theta), n)


def hoppe_branches_var(theta: float, n: int) -> float:
    return wrt_branches_var(WeightSequence.hoppe(theta), n)


def hoppe_depth_mean(theta: float, n: int) -> float:
    return wrt_depth_mean(WeightSequence.hoppe(theta), n)


def hoppe_depth_var(theta: float, n: int) -> float:
    return wrt_depth_var(WeightSequence.hoppe(theta), n)


def wrt_clt_diagnostics(weights: WeightSequence, n: int) -> Dict[str, float]:
    """Scalar diagnostics behind the branch-count CLT for a WRT.

    Returns the branch variance, the Poisson total-variation bound
    min(1, 1/mu) * sum p_i^2 from the law of small numbers, and the
    Wasserstein bound (sqrt(28) + sqrt(pi)) / (sqrt(pi) sigma).
    """
    if n < 3:
        raise GuardError(f"CLT diagnostics need n >= 3, got {n}")
    w1 = weights.weight(1)
    probs = [w1 / weights.prefix(i) for i in range(1, n)]
    mu = sum(probs)
    var = wrt_branches_var(weights, n)
    tv_bound = min(1.0, 1.0 / mu) * sum(p * p for p in probs)
    wass = float("inf")
    if var > 0:
        wass = (math.sqrt(28.0) + math.sqrt(math.pi)) / (math.sqrt(math.pi) * math.sqrt(var))
    return {
        "branches_var": var,
        "poisson_tv_bound": tv_bound,
        "wasserstein_bound": wass,
    }


# =============================================================================
# BRT / a-RT
# =============================================================================


def _check_brt(params: ShuffleParams, n: int, min_n: int = 2) -> None:
    if n < min_n:
        raise GuardError(f"formula needs n >= {min_n}, got {n}")


def brt_leaves_mean(params: ShuffleParams, n: int) -> float:
    """E[leaves] = (n-2)(1 - sum p_s^2)/2 + 1."""
    _check_brt(params, n)
    ties = sum(p * p for p in params.p)
    return (n - 2.0) * (1.0 - ties) / 2.0 + 1.0


def brt_leaves_var(params: ShuffleParams, n: int) -> float:
    _check_brt(params, n)
    if n == 2:
        return 0.0  # the two-node tree is deterministic
    q = (1.0 - sum(p * p for p in params.p)) / 2.0
    triple = 0.0
    p = params.p
    for s1 in range(params.a):
        for s2 in range(s1 + 1, params.a):
            for s3 in range(s2 + 1, params.a):
                triple += p[s1] * p[s2] * p[s3]
    return (n - 2.0) * (q - q * q) + 2.0 * (n - 3.0) * (triple - q * q)


def art_leaves_mean(a: int, n: int) -> float:
    """Uniform specialization: 1 + (n-2)(a-1)/(2a)."""
    _check_brt(ShuffleParams.uniform(a), n)
    return 1.0 + (n - 2.0) * (a - 1.0) / (2.0 * a)


def art_leaves_var(a: int, n: int) -> float:
    _check_brt(ShuffleParams.uniform(a), n)
    frac = (a * a - 1.0) / (a * a)
    return (n - 2.0) * frac / 4.0 - (n - 3.0) * frac / 6.0


def brt_branches_mean(params: ShuffleParams, n: int) -> float:
    """E[branches] = sum_{s<a} (p_s/P_s)(1 - R_s^(n-1)) + p_a."""
    _check_brt(params, n)
    p = params.p
    prefix = params.prefix()
    total = p[-1]
    for s in range(params.a - 1):
        tail = 1.0 - prefix[s]
        total += p[s] / prefix[s] * (1.0 - power01(tail, n - 1))
    return total


def brt_branches_mean_limit(params: ShuffleParams) -> float:
    """n -> infinity limit: sum_s p_s / P_s."""
    prefix = params.prefix()
    return float(sum(p / prefix[s] for s, p in enumerate(params.p)))


def art_branches_mean(a: int, n: int) -> float:
    """Uniform specialization: sum_{s<a} (1/s)(1 - (1 - s/a)^(n-1)) + 1/a."""
    if n < 2:
        raise GuardError(f"formula needs n >= 2, got {n}")
    s = np.arange(1, a, dtype=np.float64)
    powers = np.exp((n - 1) * np.log1p(-s / a)) if a > 1 else np.zeros(0)
    return float((1.0 / s * (1.0 - powers)).sum()) + 1.0 / a


def brt_branches_var(params: ShuffleParams, n: int) -> float:
    """The eight-block exact branch variance of a p-BRT (p_1 > 0, n >= 3)."""
    _check_brt(params, n, min_n=2)
    if n == 2:
        return 0.0  # single branch, deterministic
    p = params.p
    a = params.a
    P = params.prefix()  # P[s-1] = p_1 + ... + p_s
    R = [1.0 - P[s - 1] for s in range(1, a + 1)]  # R[s-1] = tail after s

    def pref(s: int) -> float:
        return float(P[s - 1])

    def tail(s: int) -> float:
        return R[s - 1]

    total = 0.0
    # mean-like block minus first moments
    for s in range(1, a):
        total += p[s - 1] / pref(s) * (1.0 - power01(tail(s), n - 1))
        total -= p[s - 1]
    # squared same-index block
    for s in range(1, a):
        x = tail(s)
        total -= p[s - 1] ** 2 * x * x * geom_sum(x * x, n - 2)
    # same-position cross-pile block
    for s in range(2, a):
        for r in range(1, s):
            x = tail(s) * tail(r)
            total -= 2.0 * p[s - 1] * p[r - 1] * x * geom_sum(x, n - 2)
    # ordered-pair blocks
    for s in range(2, a):
        inner = sum(p[r - 1] / pref(r) for r in range(1, s))
        total += (
            2.0
            * p[s - 1]
            * tail(s)
            / pref(s)
            * inner
            * (1.0 - power01(tail(s), n - 3))
        )
    for s in range(2, a):
        for r in range(1, s):
            gap = sum(p[q - 1] for q in range(r + 1, s + 1))
            total -= (
                2.0
                * p[s - 1]
                * tail(s)
                * (p[r - 1] * tail(r) / pref(r))
                / gap
                * (power01(tail(r), n - 3) - power01(tail(s), n - 3))
            )
    for s in range(1, a):
        for r in range(1, a):
            x = tail(s) * tail(r)
            total -= (
                2.0
                * p[s - 1]
                * tail(s)
                * (p[r - 1] / pref(r))
                * tail(r) ** 2
                * geom_sum(x, n - 3)
            )
    for s in range(1, a):
        for r in range(1, a):
            total += (
                2.0
                * (p[s - 1] / pref(s))
                * tail(s)
                * (p[r - 1] / pref(r))
                * power01(tail(r), n - 1)
                * (1.0 - power01(tail(s), n - 3))
            )
    return total


def art_branches_var(a: int, n: int) -> float:
    """Uniform-pile branch variance, as printed for the a-RT case.

    Evaluated with numpy over the pile indices; every (1 - x^m)/(1 - x)
    ratio has x <= ((a-1)/a)^2 < 1, so the direct quotients are safe.
    """
    if n < 2:
        raise GuardError(f"formula needs n >= 2, got {n}")
    if n == 2 or a == 1:
        return 0.0  # single branch, deterministic

    s = np.arange(1, a, dtype=np.float64)
    f = (a - s) / a  # strictly inside (0, 1)
    inv_s = 1.0 / s

    def fpow(m: int) -> np.ndarray:
        return np.exp(m * np.log(f)) if m > 0 else np.ones_like(f)

    def gsum(x: np.ndarray, m: int) -> np.ndarray:
        # sum_{t<m} x^t with x < 1 elementwise
        if m <= 0:
            return np.zeros_like(x)
        return (1.0 - np.exp(m * np.log(x))) / (1.0 - x)

    lower = np.tril(np.ones((a - 1, a - 1)), k=-1)  # rows s, cols r < s
    ff = np.outer(f, f)

    total = float((inv_s * (1.0 - fpow(n - 1))).sum())
    total -= (a - 1.0) / a
    total -= float(((f * f) * gsum(f * f, n - 2)).sum()) / a**2
    total -= 2.0 / a**2 * float((lower * ff * gsum(ff, n - 2)).sum())
    cum_h = np.concatenate(([0.0], np.cumsum(inv_s)))[: a - 1]  # H_(s-1)
    total += 2.0 * float(((a - s) / (a * s) * cum_h * (1.0 - fpow(n - 3))).sum())
    gap = s[:, None] - s[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        gap_inv = np.where(lower > 0, 1.0 / np.where(gap == 0, 1.0, gap), 0.0)
    diff = fpow(n - 3)[None, :] - fpow(n - 3)[:, None]  # f_r^(n-3) - f_s^(n-3)
    total -= 2.0 / a**2 * float(
        ((a - s)[:, None] * ((a - s) / s)[None, :] * gap_inv * diff * lower).sum()
    )
    total -= 2.0 / a**2 * float(
        ((a - s)[:, None] * (inv_s * f * f)[None, :] * gsum(ff, n - 3)).sum()
    )
    total += 2.0 * float(
        (((a - s) / (s * a))[:, None]
         * (inv_s * fpow(n - 1))[None, :]
         * (1.0 - fpow(n - 3))[:, None]).sum()
    )
    return total


def brt_branches_var_limit(params: ShuffleParams) -> float:
    """n -> infinity limit of the p-BRT branch variance."""
    p = params.p
    a = params.a
    P = params.prefix()

    def tail(s: int) -> float:
        return 1.0 - float(P[s - 1])

    total = 0.0
    for s in range(1, a):
        total += p[s - 1] / P[s - 1] - p[s - 1]
    for s in range(1, a):
        x = tail(s)
        total -= p[s - 1] ** 2 * x * x / (1.0 - x * x)
    for s in range(2, a):
        for r in range(1, s):
            x = tail(s) * tail(r)
            total -= 2.0 * p[s - 1] * p[r - 1] * x / (1.0 - x)
    for s in range(2, a):
        inner = sum(p[r - 1] / P[r - 1] for r in range(1, s))
        total += 2.0 * p[s - 1] * tail(s) / P[s - 1] * inner
    for s in range(1, a):
        for r in range(1, a):
            x = tail(s) * tail(r)
            total -= 2.0 * p[s - 1] * tail(s) * (p[r - 1] / P[r - 1]) * tail(r) ** 2 / (1.0 - x)
    return total


def art_branches_var_limit_a(n: int) -> float:
    """a -> infinity limit: the URT branch variance H_{n-1} - H2_{n-1}."""
    return urt_branches_var(n)


def _kdesc_base(params: ShuffleParams, k: int) -> float:
    """sum_s p_s (sum_{r>=s} p_r)^k."""
    p = params.p
    P = params.prefix()
    total = p[0]  # s = 1: the tail is the whole vector (power of 1)
    for s in range(2, params.a + 1):
        total += p[s - 1] * power01(1.0 - float(P[s - 2]), k)
    return total if k > 0 else 1.0


def brt_kdesc_mean(params: ShuffleParams, n: int, k: int) -> float:
    """E[# nodes with >= k descendants] = (n-k-1) sum_s p_s Q_s^k + 1."""
    _check_brt(params, n)
    if not 0 <= k <= n - 1:
        raise GuardError(f"needs 0 <= k <= n-1, got k={k}, n={n}")
    return (n - k - 1.0) * _kdesc_base(params, k) + 1.0


def art_kdesc_mean(a: int, n: int, k: int) -> float:
    """Uniform specialization: (n-k-1) a^-(k+1) sum s^k + 1."""
    if not 0 <= k <= n - 1:
        raise GuardError(f"needs 0 <= k <= n-1, got k={k}, n={n}")
    s = np.arange(1, a + 1, dtype=np.float64)
    base = float(((s / a) ** k).sum() / a)
    return (n - k - 1.0) * base + 1.0


def art_kdesc_mean_limit_a(n: int, k: int) -> float:
    """a -> infinity limit: n/(k+1)."""
    return n / (k + 1.0)


def brt_kdesc_var(params: ShuffleParams, n: int, k: int) -> float:
    """Exact variance of the >= k descendant count in a p-BRT.

    The covariance-window accounting behind the closed form requires
    n >= 2k + 1; below that the count is degenerate or the printed
    expression no longer matches the exact law, so the domain is guarded.
    """
    _check_brt(params, n)
    if not 0 <= k <= n - 1:
        raise GuardError(f"needs 0 <= k <= n-1, got k={k}, n={n}")
    if k >= 1 and n < 2 * k + 1:
        raise GuardError(
            f"descendant-count variance needs n >= 2k+1, got n={n}, k={k}"
        )
    if k == 0:
        return 0.0  # every node has >= 0 descendants
    p = params.p
    a = params.a
    P = params.prefix()
    base = _kdesc_base(params, k)
    p1 = p[0]

    total = base * ((n - k - 1.0) + p1 * (2.0 * n * k - 3.0 * k * (k + 1.0)))
    for s in range(2, a + 1):
        head = float(P[s - 2])  # sum_{u < s} p_u
        tail_s = 1.0 - head  # sum_{u >= s} p_u
        inner = 0.0
        for r in range(s, a + 1):
            tail_r = 1.0 - float(P[r - 2]) if r >= 2 else 1.0
            inner += p[r - 1] * power01(tail_r, k)
        bracket = (
            (n - k - 1.0)
            - (n - 2.0 * k - 1.0) * power01(tail_s, k)
            - geom_sum(tail_s, k)
        )
        total += 2.0 * p[s - 1] / head * inner * bracket
    total -= base * base * (n * (2.0 * k + 1.0) - (3.0 * k + 1.0) * (k + 1.0))
    return total


def art_kdesc_var(a: int, n: int, k: int) -> float:
    """Uniform-pile variance of the >= k descendant count (n >= 2k+1)."""
    if not 0 <= k <= n - 1:
        raise GuardError(f"needs 0 <= k <= n-1, got k={k}, n={n}")
    if k >= 1 and n < 2 * k + 1:
        raise GuardError(
            f"descendant-count variance needs n >= 2k+1, got n={n}, k={k}"
        )
    if k == 0:
        return 0.0
    s_all = np.arange(1, a + 1, dtype=np.float64)
    base = float(((s_all / a) ** k).sum() / a)
    total = base * ((n - k - 1.0) + (2.0 * n * k - 3.0 * k * (k + 1.0)) / a)
    for s in range(2, a + 1):
        frac = (a - s + 1.0) / a
        inner = sum((r / a) ** k / a for r in range(1, a - s + 2))
        bracket = (n - k - 1.0) - (n - 2.0 * k - 1.0) * power01(frac, k) - geom_sum(frac, k)
        total += 2.0 / (s - 1.0) * inner * bracket
    total -= base * base * (n * (2.0 * k + 1.0) - (3.0 * k + 1.0) * (k + 1.0))
    return total


def art_kdesc_var_limit_a(n: int, k: int) -> float:
    """a -> infinity limit of the >= k descendant-count variance."""
    kk = k + 1.0
    return (
        (n - k - 1.0) / kk
        - 2.0 * (n - k - 1.0) / kk * harmonic(k + 1)
        + 2.0 * (n - 2.0 * k - 1.0) / kk * harmonic(2 * k + 1)
        + 2.0 / kk * sum(harmonic(k + ell + 1) for ell in range(k))
        - (n * (2.0 * k + 1.0) - (3.0 * k + 1.0) * kk) / kk**2
    )


def brt_exactk_mean(params: ShuffleParams, n: int, k: int) -> float:
    """E[# nodes with exactly k descendants] via the telescoping identity."""
    _check_brt(params, n)
    if not 0 <= k <= n - 1:
        raise GuardError(f"needs 0 <= k <= n-1, got k={k}, n={n}")
    upper = brt_kdesc_mean(params, n, k + 1) if k + 1 <= n - 1 else 0.0
    return brt_kdesc_mean(params, n, k) - upper


def art_exactk_mean(a: int, n: int, k: int) -> float:
    if not 0 <= k <= n - 1:
        raise GuardError(f"needs 0 <= k <= n-1, got k={k}, n={n}")
    upper = art_kdesc_mean(a, n, k + 1) if k + 1 <= n - 1 else 0.0
    return art_kdesc_mean(a, n, k) - upper


def art_exactk_mean_limit_a(n: int, k: int) -> float:
    """a -> infinity limit: n/((k+1)(k+2)), the URT fraction."""
    return n / ((k + 1.0) * (k + 2.0))


def brt_position_pmf(params: ShuffleParams, n: int, k: int) -> float:
    """P(position of card n in the shuffle == k), for 2 <= k <= n."""
    if not 2 <= k <= n:
        raise GuardError(f"position needs 2 <= k <= n, got k={k}, n={n}")
    p = params.p
    P = params.prefix()
    if k < n:
        total = 0.0
        for s in range(2, params.a + 1):
            total += (
                p[s - 1]
                * power01(float(P[s - 1]), k - 2)
                * power01(float(P[s - 2]), n - k)
            )
        return total
    total = 0.0
    for s in range(1, params.a + 1):
        total += p[s - 1] * power01(float(P[s - 1]), n - 2)
    return total


def brt_position_pmf_vector(params: ShuffleParams, n: int) -> np.ndarray:
    """PMF vector over positions 2..n."""
    return np.array([brt_position_pmf(params, n, k) for k in range(2, n + 1)])


def brt_depth_mean(params: ShuffleParams, n: int) -> float:
    """E[depth of node n] of a p-BRT.

    Derived from the position decomposition: the depth is 1 plus the number
    of positions 2 <= i < position(n) whose digit is weakly smaller than all
    digits strictly between i and position(n).  Summing the joint
    probabilities over the digit v at position(n) and the digit s at i
    collapses the position/index double sum into the complete homogeneous
    symmetric polynomial h_(n-3)(P_v, P_v - P_(s-1), P_(v-1)), evaluated by
    its stable nonnegative recurrence.  (The printed closed form drops the
    dependence between the anti-record events and the position event and is
    off by O(p_1^(n-1)); this expression matches exhaustive enumeration.)
    """
    if n < 1:
        raise GuardError(f"depth formula needs n >= 1, got {n}")
    if n == 1:
        return 0.0
    p = params.p
    a = params.a
    P = [0.0] + [float(x) for x in params.prefix()]  # P[s] with P[0] = 0
    m = n - 3
    total = 1.0
    if m < 0:
        return total
    for v in range(1, a + 1):
        x = P[v]
        z = P[v - 1]
        for s in range(1, v + 1):
            y = x - P[s - 1]
            h2 = 1.0  # h_j(x, y)
            h3 = 1.0  # h_j(x, y, z)
            ypow = 1.0
            for _ in range(m):
                ypow *= y
                h2 = x * h2 + ypow
                h3 = z * h3 + h2
            total += p[v - 1] * p[s - 1] * h3
    return total


def art_depth_mean(a: int, n: int) -> float:
    """Uniform specialization, evaluated through the general prefix-ratio
    form (never via a**n denominators)."""
    return brt_depth_mean(ShuffleParams.uniform(a), n)


def brt_depth_limit_rate(params: ShuffleParams) -> float:
    """Limit of E[depth]/n as n grows: p_1."""
    return params.p[0]


# =============================================================================
# Limit constants
# =============================================================================


def golomb_dickman() -> float:
    return GOLOMB_DICKMAN


def ln2() -> float:
    return math.log(2.0)


def largest_branch_cdf_tail(c: float) -> float:
    """Limit of P(largest branch <= c n) for URTs, c in [1/2, 1]."""
    if not 0.5 <= c <= 1.0:
        raise GuardError(f"c must lie in [1/2, 1], got {c}")
    return 1.0 - math.log(1.0 / c)


# =============================================================================
# Registry
# =============================================================================


@dataclass(frozen=True)
class FormulaEntry:
    formula_id: str
    fn: Callable[..., float]
    args: tuple
    doc: str

    def evaluate(self, params: dict) -> float:
        kwargs = {}
        for name in self.args:
            if name not in params or params[name] is None:
                raise GuardError(f"formula {self.formula_id} needs parameter {name!r}")
            kwargs[name] = params[name]
        return self.fn(**kwargs)


def _weights_of(spec) -> WeightSequence:
    from .weights import parse_weights

    return spec if isinstance(spec, WeightSequence) else parse_weights(str(spec))


def _params_of(p) -> ShuffleParams:
    if isinstance(p, ShuffleParams):
        return p
    if isinstance(p, int):
        return ShuffleParams.uniform(p)
    if isinstance(p, str):
        return ShuffleParams([float(t) for t in p.split(",")])
    return ShuffleParams(list(p))


REGISTRY: Dict[str, FormulaEntry] = {}


def _register(formula_id: str, fn: Callable[..., float], args: Sequence[str], doc: str) -> None:
    REGISTRY[formula_id] = FormulaEntry(formula_id, fn, tuple(args), doc)


_register("urt.leaves.mean", lambda n: urt_leaves_mean(int(n)), ["n"], "n/2")
_register("urt.leaves.var", lambda n: urt_leaves_var(int(n)), ["n"], "n/12")
_register("urt.branches.mean", lambda n: urt_branches_mean(int(n)), ["n"], "H_(n-1)")
_register("urt.branches.var", lambda n: urt_branches_var(int(n)), ["n"], "H_(n-1) - H2_(n-1)")
_register("urt.depth.mean", lambda n: urt_depth_mean(int(n)), ["n"], "H_(n-1)")
_register("urt.depth.var", lambda n: urt_depth_var(int(n)), ["n"], "H_(n-1) - H2_(n-1)")
_register("urt.distance.mean", lambda i, j: urt_distance_mean(int(i), int(j)), ["i", "j"],
          "internodal distance expectation")
_register("urt.distance.var", lambda i, j: urt_distance_var(int(i), int(j)), ["i", "j"],
          "internodal distance variance")
_register("urt.kdesc_exact.alpha", lambda k: urt_kdesc_alpha(int(k)), ["k"],
          "limit fraction of nodes with exactly k descendants")
_register("urt.kdesc_exact.sigma2", lambda k: urt_kdesc_sigma2(int(k)), ["k"],
          "asymptotic variance of the exactly-k count")
_register("urt.branch_size.limit_rate", lambda m: urt_branch_size_limit_rate(int(m)), ["m"],
          "Poisson rate 1/m of size-m branch counts")
_register("urt.branch_size.tail_prob", lambda m, n: urt_branch_size_tail_prob(int(m), int(n)),
          ["m", "n"], "P(branch of size m exists) = 1/m for (n-1)/2 < m < n")
_register("wrt.branches.mean", lambda weights, n: wrt_branches_mean(_weights_of(weights), int(n)),
          ["weights", "n"], "w_1 sum 1/S_i")
_register("wrt.branches.var", lambda weights, n: wrt_branches_var(_weights_of(weights), int(n)),
          ["weights", "n"], "w_1 sum (S_i - w_1)/S_i^2")
_register("wrt.depth.mean", lambda weights, n: wrt_depth_mean(_weights_of(weights), int(n)),
          ["weights", "n"], "sum w_i/S_i")
_register("wrt.depth.var", lambda weights, n: wrt_depth_var(_weights_of(weights), int(n)),
          ["weights", "n"], "sum w_i S_(i-1)/S_i^2")
_register("wrt.leaf.probability",
          lambda weights, i, n: wrt_leaf_probability(_weights_of(weights), int(i), int(n)),
          ["weights", "i", "n"], "P(node i is a leaf)")
_register("wrt.leaves.mean", lambda weights, n: wrt_leaves_mean(_weights_of(weights), int(n)),
          ["weights", "n"], "sum of leaf probabilities")
_register("thetak.leaves.mean", lambda theta, k, n: thetak_leaves_mean_exact(float(theta), int(k), int(n)),
          ["theta", "k", "n"], "exact theta^k leaf expectation")
_register("thetak.leaves.concentration",
          lambda theta, k, n, t: thetak_leaves_concentration_bound(float(theta), int(k), int(n), float(t)),
          ["theta", "k", "n", "t"], "tail bound for |leaves - mean| >= t")
_register("hoppe.leaves.mean", lambda theta, n: hoppe_leaves_mean_exact(float(theta), int(n)),
          ["theta", "n"], "exact Hoppe leaf expectation")
_register("hoppe.leaves.mean_leading", lambda theta, n: hoppe_leaves_mean_leading(float(theta), int(n)),
          ["theta", "n"], "n/2 + (theta-1)/2 leading term")
_register("hoppe.leaves.concentration",
          lambda theta, n, t: hoppe_leaves_concentration_bound(float(theta), int(n), float(t)),
          ["theta", "n", "t"], "tail bound for |leaves - mean| >= t")
_register("hoppe.branches.mean", lambda theta, n: hoppe_branches_mean(float(theta), int(n)),
          ["theta", "n"], "theta sum 1/(theta+i-1), i <= n-1")
_register("hoppe.branches.var", lambda theta, n: hoppe_branches_var(float(theta), int(n)),
          ["theta", "n"], "Hoppe branch variance")
_register("hoppe.depth.mean", lambda theta, n: hoppe_depth_mean(float(theta), int(n)),
          ["theta", "n"], "Hoppe depth expectation")
_register("hoppe.depth.var", lambda theta, n: hoppe_depth_var(float(theta), int(n)),
          ["theta", "n"], "Hoppe depth variance")
_register("wrt.clt.diagnostics",
          lambda weights, n: wrt_clt_diagnostics(_weights_of(weights), int(n))["wasserstein_bound"],
          ["weights", "n"], "Wasserstein bound for the branch CLT")
_register("wrt.clt.tv_bound",
          lambda weights, n: wrt_clt_diagnostics(_weights_of(weights), int(n))["poisson_tv_bound"],
          ["weights", "n"], "Poisson TV bound for the branch count")
_register("brt.leaves.mean", lambda p, n: brt_leaves_mean(_params_of(p), int(n)), ["p", "n"],
          "(n-2)(1 - sum p^2)/2 + 1")
_register("brt.leaves.var", lambda p, n: brt_leaves_var(_params_of(p), int(n)), ["p", "n"],
          "exact BRT leaf variance")
_register("art.leaves.mean", lambda a, n: art_leaves_mean(int(a), int(n)), ["a", "n"],
          "1 + (n-2)(a-1)/(2a)")
_register("art.leaves.var", lambda a, n: art_leaves_var(int(a), int(n)), ["a", "n"],
          "uniform-pile leaf variance")
_register("brt.branches.mean", lambda p, n: brt_branches_mean(_params_of(p), int(n)), ["p", "n"],
          "exact BRT branch expectation")
_register("brt.branches.limit", lambda p: brt_branches_mean_limit(_params_of(p)), ["p"],
          "n->inf limit sum p_s/P_s")
_register("art.branches.mean", lambda a, n: art_branches_mean(int(a), int(n)), ["a", "n"],
          "uniform-pile branch expectation")
_register("brt.branches.var", lambda p, n: brt_branches_var(_params_of(p), int(n)), ["p", "n"],
          "exact BRT branch variance")
_register("brt.branches.var_limit", lambda p: brt_branches_var_limit(_params_of(p)), ["p"],
          "n->inf limit of the BRT branch variance")
_register("art.branches.var", lambda a, n: art_branches_var(int(a), int(n)), ["a", "n"],
          "uniform-pile branch variance")
_register("art.branches.var_limit_a", lambda n: art_branches_var_limit_a(int(n)), ["n"],
          "a->inf limit H_(n-1) - H2_(n-1)")
_register("brt.kdesc.mean", lambda p, n, k: brt_kdesc_mean(_params_of(p), int(n), int(k)),
          ["p", "n", "k"], "E[# nodes with >= k descendants]")
_register("brt.kdesc.var", lambda p, n, k: brt_kdesc_var(_params_of(p), int(n), int(k)),
          ["p", "n", "k"], "Var[# nodes with >= k descendants]")
_register("art.kdesc.mean", lambda a, n, k: art_kdesc_mean(int(a), int(n), int(k)),
          ["a", "n", "k"], "uniform-pile >= k descendant expectation")
_register("art.kdesc.var", lambda a, n, k: art_kdesc_var(int(a), int(n), int(k)),
          ["a", "n", "k"], "uniform-pile >= k descendant variance")
_register("art.kdesc.mean_limit_a", lambda n, k: art_kdesc_mean_limit_a(int(n), int(k)),
          ["n", "k"], "a->inf limit n/(k+1)")
_register("art.kdesc.var_limit_a", lambda n, k: art_kdesc_var_limit_a(int(n), int(k)),
          ["n", "k"], "a->inf limit of the >= k descendant variance")
_register("brt.exactk.mean", lambda p, n, k: brt_exactk_mean(_params_of(p), int(n), int(k)),
          ["p", "n", "k"], "E[# nodes with exactly k descendants]")
_register("art.exactk.mean", lambda a, n, k: art_exactk_mean(int(a), int(n), int(k)),
          ["a", "n", "k"], "uniform-pile exactly-k expectation")
_register("art.exactk.mean_limit_a", lambda n, k: art_exactk_mean_limit_a(int(n), int(k)),
          ["n", "k"], "a->inf limit n/((k+1)(k+2))")
_register("brt.position.pmf", lambda p, n, k: brt_position_pmf(_params_of(p), int(n), int(k)),
          ["p", "n", "k"], "P(position of card n == k)")
_register("brt.depth.mean", lambda p, n: brt_depth_mean(_params_of(p), int(n)), ["p", "n"],
          "exact BRT depth-of-n expectation")
_register("brt.depth.limit_rate", lambda p: brt_depth_limit_rate(_params_of(p)), ["p"],
          "limit of E[depth]/n: p_1")
_register("art.depth.mean", lambda a, n: art_depth_mean(int(a), int(n)), ["a", "n"],
          "uniform-pile depth expectation")
_register("const.golomb_dickman", golomb_dickman, [], "E[largest branch/n] limit for URTs")
_register("const.ln2", ln2, [], "limit of P(largest branch > (n-1)/2)")
_register("const.largest_branch_cdf_tail", lambda c: largest_branch_cdf_tail(float(c)), ["c"],
          "limit of P(largest branch <= c n): 1 - ln(1/c)")


def formula_ids() -> List[str]:
    return sorted(REGISTRY)


def evaluate_formula(formula_id: str, params: dict) -> float:
    entry = REGISTRY.get(formula_id)
    if entry is None:
        raise GuardError(f"unknown formula id {formula_id!r}")
    return entry.evaluate(params)
