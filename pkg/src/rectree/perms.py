"""Permutations of {2..n}, their statistics, and the two tree bijections.

Words are one-line arrangements of {2..n}; the leading 1 of the full
permutation is implicit and never stored.  ``tree_from_word`` attaches each
entry to the rightmost smaller entry on its left (to 1 if there is none);
``word_from_tree`` inverts it by inserting every node directly to the right
of its parent.  Cycle form is the standard notation: every cycle starts at
its smallest element and cycles are listed by first element in decreasing
order, which is exactly the word split at its anti-records.
"""

from __future__ import annotations

from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .trees import RecursiveTree, TreeError


class PermError(ValueError):
    """Malformed word or cycle input."""


# -- statistics on raw sequences ---------------------------------------------


def descent_count(seq: Sequence[int]) -> int:
    """Number of positions i with seq[i] > seq[i+1]."""
    return sum(1 for x, y in zip(seq, seq[1:]) if x > y)


def anti_record_count(seq: Sequence[int]) -> int:
    """Entries strictly smaller than everything before them (first counts)."""
    count, best = 0, None
    for x in seq:
        if best is None or x < best:
            count += 1
            best = x
    return count


def record_count(seq: Sequence[int]) -> int:
    """Entries strictly larger than everything before them (first counts)."""
    count, best = 0, None
    for x in seq:
        if best is None or x > best:
            count += 1
            best = x
    return count


def standard_cycles(one_line: Sequence[int]) -> List[Tuple[int, ...]]:
    """Standard cycle form of a permutation of [n] given in one-line notation.

    Each cycle starts at its smallest element; cycles are ordered by first
    element from largest to smallest, so removing the parentheses loses no
    information (a new cycle starts at every anti-record).
    """
    n = len(one_line)
    if sorted(one_line) != list(range(1, n + 1)):
        raise PermError("one-line input must be a permutation of 1..n")
    seen = [False] * (n + 1)
    cycles = []
    for start in range(1, n + 1):
        if seen[start]:
            continue
        cyc = [start]
        seen[start] = True
        nxt = one_line[start - 1]
        while nxt != start:
            cyc.append(nxt)
            seen[nxt] = True
            nxt = one_line[nxt - 1]
        cycles.append(tuple(cyc))
    cycles.sort(key=lambda c: -c[0])
    return cycles


# -- word permutations -------------------------------------------------------


class WordPermutation:
    """One-line word gamma(2..n) over the set {2..n}."""

    __slots__ = ("n", "word")

    def __init__(self, word: Iterable[int]):
        w = tuple(int(x) for x in word)
        n = len(w) + 1
        if sorted(w) != list(range(2, n + 1)):
            raise PermError(f"word must be an arrangement of 2..{n}")
        self.n = n
        self.word = w

    def anti_records(self) -> int:
        return anti_record_count(self.word)

    def records(self) -> int:
        return record_count(self.word)

    def descents(self) -> int:
        return descent_count(self.word)

    def leaf_count(self) -> int:
        """Leaves of the associated tree: descents of the word plus one."""
        if self.n < 2:
            raise PermError("leaf count needs n >= 2")
        return self.descents() + 1

    def position_of(self, value: int) -> int:
        """Position r (2-based, matching gamma indices) with word[r] == value."""
        return self.word.index(value) + 2

    def to_text(self) -> str:
        return " ".join(str(x) for x in self.word)

    @classmethod
    def from_text(cls, text: str) -> "WordPermutation":
        return cls(int(t) for t in text.split())

    @classmethod
    def identity(cls, n: int) -> "WordPermutation":
        return cls(range(2, n + 1))

    def __eq__(self, other) -> bool:
        return isinstance(other, WordPermutation) and self.word == other.word

    def __hash__(self) -> int:
        return hash(self.word)

    def __repr__(self) -> str:  # pragma: no cover
        return f"WordPermutation({''.join(map(str, self.word)) or '-'})"


class CycleForm:
    """Cycles partitioning {2..n}, normalized to standard notation.

    Node 1 is its own fixed cycle and is never stored.  Arbitrary rotations
    and cycle orderings are accepted and normalized, not rejected.
    """

    __slots__ = ("n", "cycles")

    def __init__(self, cycles: Iterable[Iterable[int]]):
        normalized = []
        seen = set()
        for cyc in cycles:
            c = [int(x) for x in cyc]
            if not c:
                raise PermError("empty cycle")
            if len(set(c)) != len(c):
                raise PermError(f"repeated element inside cycle {c}")
            rot = c.index(min(c))
            c = c[rot:] + c[:rot]
            if seen & set(c):
                raise PermError("cycles must be disjoint")
            seen |= set(c)
            normalized.append(tuple(c))
        n = (max(seen) if seen else 1)
        if seen != set(range(2, n + 1)):
            raise PermError(f"cycles must partition 2..{n}")
        normalized.sort(key=lambda c: -c[0])
        self.n = n
        self.cycles = tuple(normalized)

    def to_text(self) -> str:
        return "".join("(" + " ".join(map(str, c)) + ")" for c in self.cycles)

    @classmethod
    def from_text(cls, text: str) -> "CycleForm":
        text = text.strip()
        if text.count("(") != text.count(")"):
            raise PermError(f"unbalanced parentheses in {text!r}")
        groups = []
        for chunk in text.split(")"):
            chunk = chunk.strip()
            if not chunk:
                continue
            if not chunk.startswith("("):
                raise PermError(f"bad cycle text {text!r}")
            groups.append([int(t) for t in chunk[1:].split()])
        return cls(groups)

    def __eq__(self, other) -> bool:
        return isinstance(other, CycleForm) and self.cycles == other.cycles

    def __hash__(self) -> int:
        return hash(self.cycles)

    def __repr__(self) -> str:  # pragma: no cover
        return f"CycleForm({self.to_text()})"


# -- bijections ----------------------------------------------------------------


def tree_from_word(w: WordPermutation) -> RecursiveTree:
    """Attach each entry to the rightmost smaller entry on its left (else 1)."""
    parents = np.empty(w.n - 1, dtype=np.int64)
    stack: List[int] = []  # decreasing stack of values seen so far
    for value in w.word:
        while stack and stack[-1] > value:
            stack.pop()
        parents[value - 2] = stack[-1] if stack else 1
        stack.append(value)
    return RecursiveTree(parents)


def word_from_tree(t: RecursiveTree) -> WordPermutation:
    """Insert every node directly to the right of its parent, in label order."""
    seq = [1]
    for j in range(2, t.n + 1):
        seq.insert(seq.index(t.parent(j)) + 1, j)
    return WordPermutation(seq[1:])


def cycles_from_tree(t: RecursiveTree) -> CycleForm:
    """Cycle form of the tree's permutation: the word split at anti-records."""
    if t.n < 2:
        return CycleForm([])
    word = word_from_tree(t).word
    groups: List[List[int]] = []
    best = None
    for x in word:
        if best is None or x < best:
            groups.append([x])
            best = x
        else:
            groups[-1].append(x)
    return CycleForm(groups)


def tree_from_cycles(c: CycleForm) -> RecursiveTree:
    """Inverse of :func:`cycles_from_tree` (concatenate standard cycles)."""
    word: List[int] = []
    for cyc in c.cycles:
        word.extend(cyc)
    if not word:
        return RecursiveTree([])
    return tree_from_word(WordPermutation(word))


def all_words(n: int):
    """Yield every WordPermutation of {2..n} ((n-1)! of them)."""
    from itertools import permutations

    if n < 1:
        raise TreeError("n must be >= 1")
    for p in permutations(range(2, n + 1)):
        yield WordPermutation(p)
