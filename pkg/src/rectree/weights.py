"""Node-weight sequences for weighted recursive trees.

A weight sequence assigns a positive weight to node 1 and a nonnegative
weight to every later node; node j attaches to node i < j with probability
weight(i) / prefix(j - 1).  Prefix sums are memoized and, for the presets
with a closed form (constant, hoppe, theta-k, linear, geometric), computed
exactly instead of by accumulation.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np


class WeightError(ValueError):
    """Invalid weight sequence or an evaluation outside its usable range."""


class WeightSequence:
    """Positive node weights i -> w_i with memoized prefix sums.

    Instances are immutable from the caller's point of view; the prefix
    cache only ever grows (single writer, many readers).
    """

    def __init__(
        self,
        weight_fn: Callable[[int], float],
        *,
        tag: str,
        params: Optional[dict] = None,
        prefix_fn: Optional[Callable[[int], float]] = None,
    ):
        self._weight_fn = weight_fn
        self.tag = tag
        self.params = dict(params or {})
        self._prefix_fn = prefix_fn
        self._prefix_cache = [0.0]  # S_0 = 0
        w1 = self.weight(1)
        if not (w1 > 0.0):
            raise WeightError(f"weight of node 1 must be positive, got {w1}")

    # -- presets ---------------------------------------------------------

    @classmethod
    def const(cls) -> "WeightSequence":
        return cls(lambda i: 1.0, tag="const", prefix_fn=float)

    @classmethod
    def hoppe(cls, theta: float) -> "WeightSequence":
        if theta <= 0:
            raise WeightError(f"hoppe weight theta must be positive, got {theta}")
        return cls(
            lambda i: theta if i == 1 else 1.0,
            tag="hoppe",
            params={"theta": theta},
            prefix_fn=lambda i: theta + i - 1.0,
        )

    @classmethod
    def theta_k(cls, theta: float, k: int) -> "WeightSequence":
        if theta <= 0:
            raise WeightError(f"theta must be positive, got {theta}")
        if k < 1:
            raise WeightError(f"k must be >= 1, got {k}")
        return cls(
            lambda i: theta if i <= k else 1.0,
            tag="thetak",
            params={"theta": theta, "k": k},
            prefix_fn=lambda i: i * theta if i <= k else k * theta + (i - k),
        )

    @classmethod
    def linear(cls) -> "WeightSequence":
        return cls(lambda i: float(i), tag="linear", prefix_fn=lambda i: i * (i + 1) / 2.0)

    @classmethod
    def power(cls, k: int) -> "WeightSequence":
        if k < 1:
            raise WeightError(f"power exponent must be >= 1, got {k}")
        return cls(lambda i: float(i) ** k, tag="power", params={"k": k})

    @classmethod
    def reciprocal(cls, k: int) -> "WeightSequence":
        if k < 1:
            raise WeightError(f"reciprocal exponent must be >= 1, got {k}")
        return cls(lambda i: float(i) ** -k, tag="recip", params={"k": k})

    @classmethod
    def log(cls) -> "WeightSequence":
        # ln(i) has weight 0 at the root, which the model does not allow;
        # the shifted variant keeps the same growth with w_1 = ln 2 > 0.
        return cls(lambda i: math.log(i + 1.0), tag="log")

    @classmethod
    def geometric(cls, a: float) -> "WeightSequence":
        if a <= 0:
            raise WeightError(f"geometric ratio must be positive, got {a}")
        if a == 1.0:
            return cls.const()

        def prefix(i: int) -> float:
            # (a^i - 1) / (a - 1); overflows to inf for large i when a > 1.
            try:
                return (math.pow(a, i) - 1.0) / (a - 1.0)
            except OverflowError:
                return math.inf

        return cls(
            lambda i: math.pow(a, i - 1),
            tag="geom",
            params={"a": a},
            prefix_fn=prefix,
        )

    @classmethod
    def from_table(
        cls, values: Sequence[float], tail: Optional[float] = None
    ) -> "WeightSequence":
        vals = [float(v) for v in values]
        if not vals:
            raise WeightError("weight table must not be empty")
        if any(v < 0 for v in vals):
            raise WeightError("weights must be nonnegative")

        def weight(i: int) -> float:
            if i <= len(vals):
                return vals[i - 1]
            if tail is not None:
                return float(tail)
            raise WeightError(
                f"weight table of length {len(vals)} has no entry for node {i}"
            )

        return cls(weight, tag="table", params={"size": len(vals), "tail": tail})

    # -- evaluation ------------------------------------------------------

    def weight(self, i: int) -> float:
        if i < 1:
            raise WeightError(f"node index must be >= 1, got {i}")
        try:
            w = float(self._weight_fn(i))
        except OverflowError as exc:
            raise WeightError(f"weight of node {i} overflows") from exc
        if w < 0 or not math.isfinite(w):
            raise WeightError(f"weight of node {i} is {w}; must be finite and >= 0")
        return w

    def prefix(self, i: int) -> float:
        """S_i = w_1 + ... + w_i (S_0 = 0)."""
        if i < 0:
            raise WeightError(f"prefix index must be >= 0, got {i}")
        if self._prefix_fn is not None:
            return 0.0 if i == 0 else float(self._prefix_fn(i))
        while len(self._prefix_cache) <= i:
            j = len(self._prefix_cache)
            self._prefix_cache.append(self._prefix_cache[-1] + self.weight(j))
        return self._prefix_cache[i]

    def prefix_array(self, m: int) -> np.ndarray:
        """Vector (S_1, ..., S_m)."""
        return np.array([self.prefix(i) for i in range(1, m + 1)], dtype=np.float64)

    def average(self, j: int) -> float:
        """Mean weight among the first j-1 nodes (the time-j average)."""
        if j < 2:
            raise WeightError(f"average is defined for j >= 2, got {j}")
        return self.prefix(j - 1) / (j - 1)

    def describe(self) -> str:
        if not self.params:
            return self.tag
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.tag}({inner})"

    def __repr__(self) -> str:  # pragma: no cover
        return f"WeightSequence<{self.describe()}>"


def parse_weights(spec: str) -> WeightSequence:
    """Parse a CLI weight preset string.

    Grammar: ``const`` | ``hoppe:T`` | ``thetak:T,K`` | ``linear`` |
    ``power:K`` | ``recip:K`` | ``log`` | ``geom:A`` | ``table:FILE``.
    """
    name, _, arg = spec.partition(":")
    name = name.strip().lower()
    try:
        if name == "const":
            return WeightSequence.const()
        if name == "hoppe":
            return WeightSequence.hoppe(float(arg))
        if name == "thetak":
            theta_s, k_s = arg.split(",")
            return WeightSequence.theta_k(float(theta_s), int(k_s))
        if name == "linear":
            return WeightSequence.linear()
        if name == "power":
            return WeightSequence.power(int(arg))
        if name == "recip":
            return WeightSequence.reciprocal(int(arg))
        if name == "log":
            return WeightSequence.log()
        if name == "geom":
            return WeightSequence.geometric(float(arg))
        if name == "table":
            with open(arg, "r", encoding="utf-8") as fh:
                values = [float(tok) for tok in fh.read().split()]
            return WeightSequence.from_table(values, tail=1.0)
    except WeightError:
        raise
    except (ValueError, OSError) as exc:
        raise WeightError(f"bad weight spec {spec!r}: {exc}") from exc
    raise WeightError(f"unknown weight preset {name!r}")
