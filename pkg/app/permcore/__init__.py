# permcore.py

"""
Ordinary finite permutations.

A ``Perm`` is an immutable sequence of the values 1..n. This module provides
the operations the rest of the package is built on: pattern containment,
direct sums and their block decomposition, inversion graphs, excedance
statistics and backtracking enumeration of pattern-avoiding permutations.

Positions reported to callers (witnesses, inversion pairs, components) are
1-based, matching the usual notation pi(1), ..., pi(n).
"""

# -----------------------------------------------------------------------------------
# Import Statements
# -----------------------------------------------------------------------------------
# itertools supplies the position pairs and the brute-force sweep over S_n.
import itertools
# Module logger; handlers are configured by the CLI only.
import logging
# Frozen dataclasses make Perm hashable so it can key dicts and sets.
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, NamedTuple, Optional, Sequence, Tuple

# networkx supplies the inversion graph and its connected components.
import networkx as nx

# Validation failures are reported through the package exception hierarchy.
from app.exceptions import EmptyPermutationError, InvalidPermutationError

logger = logging.getLogger(__name__)


# -----------------------------------------------------------------------------------
# Domain Types
# -----------------------------------------------------------------------------------
@dataclass(frozen=True)
class Perm:
    """
    A permutation of [n] stored as its sequence of values.

    **Fields:**
    - `values (tuple[int, ...])`: pi(1), ..., pi(n); must contain each of 1..n once.

    The empty tuple is the unique permutation of size 0.

    **Example:**
    >>> Perm.parse("4312576").size
    7
    >>> str(Perm((2, 1)))
    '21'
    """

    values: Tuple[int, ...]

    def __post_init__(self) -> None:
        values = tuple(self.values)
        object.__setattr__(self, "values", values)
        if sorted(values) != list(range(1, len(values) + 1)):
            raise InvalidPermutationError(
                f"{values!r} is not a permutation of 1..{len(values)}"
            )

    @property
    def size(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __call__(self, i: int) -> int:
        """
        Evaluate pi(i) for 1 <= i <= n.

        **Raises:**
        - `InvalidPermutationError`: for a position outside 1..n.
        """
        if not 1 <= i <= self.size:
            raise InvalidPermutationError(f"position {i} is outside 1..{self.size}")
        return self.values[i - 1]

    def __str__(self) -> str:
        # Digit string up to size 9, comma separated beyond.
        if self.size <= 9:
            return "".join(str(v) for v in self.values)
        return ",".join(str(v) for v in self.values)

    @classmethod
    def parse(cls, text: str) -> "Perm":
        """
        Read the one-line text form: ``4312576`` or ``10,1,2,...``.

        **Raises:**
        - `InvalidPermutationError`: if the text is not a permutation.
        """
        text = text.strip()
        try:
            if "," in text:
                values = tuple(int(part) for part in text.split(","))
            else:
                values = tuple(int(ch) for ch in text)
        except ValueError as exc:
            raise InvalidPermutationError(f"cannot read a permutation from {text!r}") from exc
        return cls(values)

    @classmethod
    def identity(cls, n: int) -> "Perm":
        return cls(tuple(range(1, n + 1)))


class BlockProfile(NamedTuple):
    """Sum decomposition of a permutation into indecomposable blocks."""

    blocks: Tuple[Perm, ...]
    first_block_size: int
    block_count: int
    period: int


class ExcedanceStats(NamedTuple):
    excedances: int
    fixed_points: int


# -----------------------------------------------------------------------------------
# Order isomorphism
# -----------------------------------------------------------------------------------
def flatten(sequence: Sequence[int]) -> Perm:
    """
    Return the permutation order-isomorphic to a sequence of distinct integers.

    **Example:**
    >>> str(flatten((7, -2, -1)))
    '312'
    """
    ranks = {value: rank for rank, value in enumerate(sorted(sequence), start=1)}
    if len(ranks) != len(sequence):
        raise InvalidPermutationError(f"{tuple(sequence)!r} has repeated entries")
    return Perm(tuple(ranks[value] for value in sequence))


def _pattern_bounds(pattern: Sequence[int]) -> list:
    # For index j: earlier indices holding the nearest smaller and nearest larger value.
    bounds = []
    for j, value in enumerate(pattern):
        below = [i for i in range(j) if pattern[i] < value]
        above = [i for i in range(j) if pattern[i] > value]
        low = max(below, key=lambda i: pattern[i], default=None)
        high = min(above, key=lambda i: pattern[i], default=None)
        bounds.append((low, high))
    return bounds


def search_occurrence(
    pattern: Sequence[int],
    value_at: Callable[[int], int],
    candidates: Callable[[int, Optional[int]], Iterable[int]],
) -> Optional[Tuple[int, ...]]:
    """
    Depth-first search for the lexicographically least occurrence of a pattern.

    The host is abstract: ``value_at(pos)`` gives the host value at a position
    and ``candidates(j, previous)`` yields, in increasing order, the positions
    allowed for pattern index ``j`` after ``previous`` (``None`` for ``j == 0``).
    A candidate is pruned as soon as its value falls outside the interval fixed
    by the already placed pattern entries.

    **Returns:**
    - the chosen host positions, or ``None`` when there is no occurrence.
    """
    k = len(pattern)
    if k == 0:
        return ()
    bounds = _pattern_bounds(pattern)
    chosen: list = []
    placed: list = []

    def extend(j: int) -> bool:
        if j == k:
            return True
        low_index, high_index = bounds[j]
        low = placed[low_index] if low_index is not None else None
        high = placed[high_index] if high_index is not None else None
        previous = chosen[-1] if chosen else None
        for position in candidates(j, previous):
            value = value_at(position)
            if (low is not None and value <= low) or (high is not None and value >= high):
                continue
            chosen.append(position)
            placed.append(value)
            if extend(j + 1):
                return True
            chosen.pop()
            placed.pop()
        return False

    return tuple(chosen) if extend(0) else None


def occurrence_in_sequence(
    pattern: Sequence[int], sequence: Sequence[int], anchor_last: bool = False
) -> Optional[Tuple[int, ...]]:
    """
    Find the least occurrence of ``pattern`` in a sequence of distinct integers.

    With ``anchor_last`` the last pattern entry must sit on the last entry of the
    sequence, which is all that needs checking when the sequence minus its last
    entry is already known to avoid the pattern. Positions are 0-based.
    """
    k, m = len(pattern), len(sequence)
    if k > m:
        return None

    def candidates(j: int, previous: Optional[int]) -> Iterable[int]:
        start = 0 if previous is None else previous + 1
        if anchor_last and j == k - 1:
            return [m - 1] if start <= m - 1 else []
        return range(start, m - (k - 1 - j))

    return search_occurrence(pattern, sequence.__getitem__, candidates)


# -----------------------------------------------------------------------------------
# Containment
# -----------------------------------------------------------------------------------
def occurrence(pattern: Perm, host: Perm) -> Optional[Tuple[int, ...]]:
    """
    Return the lexicographically least occurrence of ``pattern`` in ``host``.

    **Parameters:**
    - `pattern (Perm)`: the pattern; the empty pattern occurs everywhere.
    - `host (Perm)`: the permutation searched.

    **Returns:**
    - `tuple[int, ...] | None`: strictly increasing 1-based positions whose host
      values are order-isomorphic to the pattern, or ``None``.

    **Example:**
    >>> occurrence(Perm.parse("4123"), Perm.parse("493125876"))
    (2, 3, 6, 7)
    """
    found = occurrence_in_sequence(pattern.values, host.values)
    if found is None:
        return None
    return tuple(i + 1 for i in found)


def contains(pattern: Perm, host: Perm) -> bool:
    """True iff ``host`` has a subsequence order-isomorphic to ``pattern``."""
    return occurrence(pattern, host) is not None


# -----------------------------------------------------------------------------------
# Direct sums and blocks
# -----------------------------------------------------------------------------------
def direct_sum(left: Perm, right: Perm) -> Perm:
    """
    Juxtapose two diagrams diagonally: ``left`` then ``right`` shifted up by |left|.

    **Example:**
    >>> str(direct_sum(Perm.parse("1"), Perm.parse("21")))
    '132'
    """
    offset = left.size
    return Perm(left.values + tuple(v + offset for v in right.values))


def _period(values: Tuple[int, ...]) -> int:
    n = len(values)
    for d in range(1, n + 1):
        if n % d:
            continue
        if all(values[i] == values[i % d] + d * (i // d) for i in range(n)):
            return d
    return n  # pragma: no cover


def sum_blocks(p: Perm) -> BlockProfile:
    """
    Split a permutation into its sum-indecomposable blocks.

    A block ends at position i exactly when the first i values are 1..i.

    **Returns:**
    - `BlockProfile`: the blocks in order, a(pi), chi(pi) and the period lambda(pi),
      the least d dividing n such that pi is the (n/d)-fold sum of its first d entries.

    **Raises:**
    - `EmptyPermutationError`: for the empty permutation.

    **Example:**
    >>> profile = sum_blocks(Perm.parse("4312576"))
    >>> [str(b) for b in profile.blocks], profile.first_block_size, profile.block_count
    (['4312', '1', '21'], 4, 3)
    """
    if p.size == 0:
        raise EmptyPermutationError("the empty permutation has no blocks")
    blocks = []
    start = 0
    running_max = 0
    for i, value in enumerate(p.values, start=1):
        running_max = max(running_max, value)
        if running_max == i:
            blocks.append(flatten(p.values[start:i]))
            start = i
    return BlockProfile(
        blocks=tuple(blocks),
        first_block_size=blocks[0].size,
        block_count=len(blocks),
        period=_period(p.values),
    )


def is_sum_indecomposable(p: Perm) -> bool:
    return p.size >= 1 and sum_blocks(p).block_count == 1


# -----------------------------------------------------------------------------------
# Inversions
# -----------------------------------------------------------------------------------
def inversions(p: Perm) -> frozenset:
    """The set of 1-based pairs (i, j) with i < j and p(i) > p(j)."""
    return frozenset(
        (i + 1, j + 1)
        for i, j in itertools.combinations(range(p.size), 2)
        if p.values[i] > p.values[j]
    )


def inversion_graph(p: Perm) -> nx.Graph:
    """Graph on positions 1..n with an edge for every inversion."""
    graph = nx.Graph()
    graph.add_nodes_from(range(1, p.size + 1))
    graph.add_edges_from(inversions(p))
    return graph


def inversion_components(p: Perm) -> list:
    """Connected components of the inversion graph as sorted position tuples, left to right."""
    components = (tuple(sorted(c)) for c in nx.connected_components(inversion_graph(p)))
    return sorted(components)


# -----------------------------------------------------------------------------------
# Excedances
# -----------------------------------------------------------------------------------
def exc_stats(p: Perm) -> ExcedanceStats:
    """
    Count excedances (p(i) > i) and fixed points (p(i) = i).

    **Example:**
    >>> exc_stats(Perm.parse("4312576"))
    ExcedanceStats(excedances=3, fixed_points=1)
    """
    excedances = sum(1 for i, v in enumerate(p.values, start=1) if v > i)
    fixed_points = sum(1 for i, v in enumerate(p.values, start=1) if v == i)
    return ExcedanceStats(excedances, fixed_points)


def descents(p: Perm) -> int:
    """Number of positions i with p(i) > p(i+1)."""
    return sum(1 for a, b in zip(p.values, p.values[1:]) if a > b)


# -----------------------------------------------------------------------------------
# Enumeration
# -----------------------------------------------------------------------------------
def all_permutations(n: int) -> Iterator[Perm]:
    """All of S_n in lexicographic order."""
    for values in itertools.permutations(range(1, n + 1)):
        yield Perm(values)


def enumerate_avoiders(n: int, patterns: Iterable[Perm]) -> Iterator[Perm]:
    """
    Yield S_n(R) in lexicographic order by backtracking.

    Values are appended smallest first; a prefix is abandoned as soon as it
    contains one of the patterns. Because the shorter prefix already avoids
    every pattern, only occurrences ending at the new entry are searched.

    **Parameters:**
    - `n (int)`: size, n >= 0.
    - `patterns (Iterable[Perm])`: the set R.

    **Example:**
    >>> [str(p) for p in enumerate_avoiders(3, [Perm.parse(s) for s in ("321", "312", "231")])]
    ['123', '132', '213']
    """
    if n < 0:
        raise InvalidPermutationError(f"size must be non-negative, got {n}")
    patterns = tuple(patterns)
    if any(pattern.size == 0 for pattern in patterns):
        return
    logger.debug("enumerating S_%d avoiding %s", n, [str(p) for p in patterns])

    def grow(prefix: Tuple[int, ...], remaining: Tuple[int, ...]) -> Iterator[Perm]:
        if not remaining:
            yield Perm(prefix)
            return
        for index, value in enumerate(remaining):
            candidate = prefix + (value,)
            if any(
                occurrence_in_sequence(pattern.values, candidate, anchor_last=True) is not None
                for pattern in patterns
            ):
                continue
            yield from grow(candidate, remaining[:index] + remaining[index + 1:])

    yield from grow((), tuple(range(1, n + 1)))
