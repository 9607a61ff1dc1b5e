"""rectree: random recursive trees, their oracles, and a verification harness."""

from .rng import RandomStream
from .trees import RecursiveTree
from .perms import CycleForm, WordPermutation
from .weights import WeightSequence, parse_weights
from .samplers import (
    DigitAssignment,
    ShuffleParams,
    sample_brt,
    sample_digits,
    sample_hoppe,
    sample_shuffle,
    sample_shuffle_by_cut_and_riffle,
    sample_theta_k,
    sample_urt,
    sample_wrt,
    shuffle_from_digits,
)

__version__ = "0.1.0"

__all__ = [
    "RandomStream",
    "RecursiveTree",
    "WordPermutation",
    "CycleForm",
    "WeightSequence",
    "parse_weights",
    "ShuffleParams",
    "DigitAssignment",
    "sample_urt",
    "sample_wrt",
    "sample_hoppe",
    "sample_theta_k",
    "sample_brt",
    "sample_digits",
    "sample_shuffle",
    "sample_shuffle_by_cut_and_riffle",
    "shuffle_from_digits",
    "__version__",
]
