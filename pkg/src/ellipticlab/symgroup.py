"""Symmetric-group combinatorics: permutations, cycle statistics, pairings.

Permutations act on {0, ..., n-1}; composition is (p * q)(i) = p(q(i)).
Only the cycle structure of products like p * q.inverse() feeds the
Weingarten machinery, so the composition convention is fixed here once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

ENUM_CAP = 8  # 8! = 40320; full enumeration beyond this is pointless


class GroupSizeError(ValueError):
    """Raised when an operation mixes sizes or exceeds the enumeration cap."""


@dataclass(frozen=True)
class Permutation:
    """One-line notation: i maps to images[i]."""

    images: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(len(self.images))):
            raise ValueError(f"not a bijection of 0..{len(self.images) - 1}: {self.images!r}")

    @property
    def n(self) -> int:
        return len(self.images)

    @staticmethod
    def identity(n: int) -> "Permutation":
        return Permutation(tuple(range(n)))

    @staticmethod
    def from_cycles(n: int, *cycles: tuple[int, ...]) -> "Permutation":
        images = list(range(n))
        for cycle in cycles:
            for a, b in zip(cycle, cycle[1:] + cycle[:1]):
                images[a] = b
        return Permutation(tuple(images))

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if self.n != other.n:
            raise GroupSizeError(f"size mismatch: {self.n} vs {other.n}")
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        """Cycle decomposition; each cycle starts at its smallest element and
        follows i -> images[i], cycles ordered by their smallest element."""
        seen = [False] * self.n
        out = []
        for start in range(self.n):
            if seen[start]:
                continue
            cyc = [start]
            seen[start] = True
            j = self.images[start]
            while j != start:
                cyc.append(j)
                seen[j] = True
                j = self.images[j]
            out.append(tuple(cyc))
        return out

    def cycle_type(self) -> tuple[int, ...]:
        return tuple(sorted((len(c) for c in self.cycles()), reverse=True))

    def matrix(self, dtype=float) -> np.ndarray:
        """Matrix P with P e_i = e_{sigma(i)}, so Tr(P^k) counts fixed points of sigma^k."""
        P = np.zeros((self.n, self.n), dtype=dtype)
        P[np.asarray(self.images), np.arange(self.n)] = 1
        return P


@dataclass(frozen=True)
class CycleStats:
    num_cycles: int
    fixed_points: int
    cycle_list: tuple[tuple[int, ...], ...]


def cycle_stats(p: Permutation) -> CycleStats:
    cycles = p.cycles()
    return CycleStats(
        num_cycles=len(cycles),
        fixed_points=sum(1 for c in cycles if len(c) == 1),
        cycle_list=tuple(cycles),
    )


def compose(p: Permutation, q: Permutation) -> Permutation:
    return p * q


def invert(p: Permutation) -> Permutation:
    return p.inverse()


def enumerate_group(n: int) -> list[Permutation]:
    """All n! permutations in lexicographic one-line order."""
    if not 1 <= n <= ENUM_CAP:
        raise GroupSizeError(f"n={n} outside [1, {ENUM_CAP}]")
    return [Permutation(images) for images in itertools.permutations(range(n))]


def pairings(n: int) -> list[Permutation]:
    """The involutions whose cycles all have length 2 (perfect pairings).

    Empty for odd n; (n-1)!! elements for even n."""
    if n < 0:
        raise GroupSizeError("n must be nonnegative")
    if n % 2 == 1:
        return []

    def rec(free: tuple[int, ...]) -> list[list[tuple[int, int]]]:
        if not free:
            return [[]]
        a, rest = free[0], free[1:]
        out = []
        for idx, b in enumerate(rest):
            remaining = rest[:idx] + rest[idx + 1:]
            for tail in rec(remaining):
                out.append([(a, b)] + tail)
        return out

    result = []
    for pairing in rec(tuple(range(n))):
        images = list(range(n))
        for a, b in pairing:
            images[a], images[b] = b, a
        result.append(Permutation(tuple(images)))
    return result


def partitions(n: int) -> list[tuple[int, ...]]:
    """Integer partitions of n as descending tuples (cycle types of S_n)."""

    def rec(remaining: int, cap: int) -> list[tuple[int, ...]]:
        if remaining == 0:
            return [()]
        out = []
        for part in range(min(remaining, cap), 0, -1):
            for tail in rec(remaining - part, part):
                out.append((part,) + tail)
        return out

    return rec(n, n)


def permutation_with_type(cycle_type: tuple[int, ...]) -> Permutation:
    """A canonical representative with the given cycle type."""
    n = sum(cycle_type)
    images = list(range(n))
    offset = 0
    for length in cycle_type:
        block = list(range(offset, offset + length))
        for a, b in zip(block, block[1:] + block[:1]):
            images[a] = b
        offset += length
    return Permutation(tuple(images))
