# affine.py

"""
Affine and bounded affine permutations.

An affine permutation of size n is a bijection w of the integers with
w(i + n) = w(i) + n whose window w(1), ..., w(n) sums to n(n+1)/2. It is
stored as that window; the size is the window length and is part of the
object's identity, so the infinite sum of 2143 (size 4) and of 21 (size 2)
are different objects even though they agree as functions.

Besides validation and evaluation this module provides shifts, the standard
decomposition (flattened permutation plus integer word), decomposability
with an explicit cut search, the finite oscillations, and pattern containment
over a finite horizon that is certified to give the same answer as an
unbounded search.
"""

# -----------------------------------------------------------------------------------
# Import Statements
# -----------------------------------------------------------------------------------
# Module logger for witness searches and cut detection.
import logging
from dataclasses import dataclass
# Integral accepts int and int-like types but rejects floats in a window.
from numbers import Integral
from typing import Iterable, NamedTuple, Optional, Sequence, Tuple

# One exception per way a window can be invalid.
from app.exceptions import (
    CenteringError,
    DistinctnessError,
    EmptyPermutationError,
    HorizonError,
    InvalidPermutationError,
    SizeMismatchError,
    WordSumError,
)
# Containment over a finite stretch of w reuses the ordinary pattern search.
from app.permcore import Perm, flatten, search_occurrence

logger = logging.getLogger(__name__)


# -----------------------------------------------------------------------------------
# Domain Types
# -----------------------------------------------------------------------------------
@dataclass(frozen=True)
class AffinePerm:
    """
    An affine permutation given by its window.

    **Fields:**
    - `window (tuple[int, ...])`: w(1), ..., w(n), pairwise distinct modulo n and
      summing to n(n+1)/2.

    **Raises:**
    - `EmptyPermutationError`: for an empty window.
    - `DistinctnessError`: if two entries agree modulo n.
    - `CenteringError`: if the entries do not sum to n(n+1)/2.

    **Example:**
    >>> w = AffinePerm((2, 7, -2, -1, 9, 6))
    >>> w.size, w(7)
    (6, 8)
    """

    window: Tuple[int, ...]

    def __post_init__(self) -> None:
        # Entries must already be integers; floats are never rounded.
        if not all(isinstance(v, Integral) for v in self.window):
            raise InvalidPermutationError(f"window entries must be integers, got {tuple(self.window)!r}")
        window = tuple(int(v) for v in self.window)
        object.__setattr__(self, "window", window)
        n = len(window)
        if n == 0:
            raise EmptyPermutationError("an affine permutation needs a nonempty window")
        residues = {v % n for v in window}
        if len(residues) != n:
            raise DistinctnessError(f"window {window!r} repeats a residue modulo {n}")
        if sum(window) != n * (n + 1) // 2:
            raise CenteringError(
                f"window {window!r} sums to {sum(window)}, expected {n * (n + 1) // 2}"
            )

    @property
    def size(self) -> int:
        return len(self.window)

    def __call__(self, i: int) -> int:
        return apply(self, i)

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.window)

    @classmethod
    def parse(cls, text: str, size: Optional[int] = None) -> "AffinePerm":
        """Read ``2,7,-2,-1,9,6``; an explicit ``size`` must match the entry count."""
        try:
            window = tuple(int(part) for part in text.split(",") if part.strip())
        except ValueError as exc:
            raise InvalidPermutationError(f"cannot read a window from {text!r}") from exc
        return make_affine(window, size=size)


class StdDecomposition(NamedTuple):
    """The unique pair (flat, word) with w(i) = flat(i) + n * word[i] and sum(word) = 0."""

    flat: Perm
    word: Tuple[int, ...]

    def has_bounded_signs(self) -> bool:
        """
        Check the sign pattern that characterises bounded affine permutations:
        word entries in {-1, 0} at excedances of flat, 0 at fixed points and
        {0, 1} below the diagonal.
        """
        for i, (value, letter) in enumerate(zip(self.flat.values, self.word), start=1):
            if value > i and letter not in (-1, 0):
                return False
            if value == i and letter != 0:
                return False
            if value < i and letter not in (0, 1):
                return False
        return True


class Decomposition(NamedTuple):
    """w equals the shift by ``shift`` of the infinite sum of ``block``."""

    shift: int
    block: Perm


# -----------------------------------------------------------------------------------
# Construction and evaluation
# -----------------------------------------------------------------------------------
def make_affine(window: Sequence[int], size: Optional[int] = None) -> AffinePerm:
    """
    Validate a window and build an ``AffinePerm``.

    **Parameters:**
    - `window (Sequence[int])`: w(1), ..., w(n).
    - `size (int | None)`: optional explicit size; rejected unless equal to len(window).

    **Example:**
    >>> make_affine((1, 2, 3)).size
    3
    """
    if size is not None and size != len(window):
        raise SizeMismatchError(f"size={size} but the window has {len(window)} entries")
    return AffinePerm(tuple(window))


def apply(w: AffinePerm, i: int) -> int:
    """Evaluate w(i) for any integer i using w(i + n) = w(i) + n."""
    quotient, remainder = divmod(i - 1, w.size)
    return w.window[remainder] + quotient * w.size


def identity(n: int) -> AffinePerm:
    return AffinePerm(tuple(range(1, n + 1)))


def max_displacement(w: AffinePerm) -> int:
    """Delta = max |w(i) - i| over one period, hence over all integers."""
    return max(abs(v - i) for i, v in enumerate(w.window, start=1))


def is_bounded(w: AffinePerm) -> bool:
    """True iff |w(i) - i| < n for every i."""
    return max_displacement(w) < w.size


def shift(w: AffinePerm, r: int) -> AffinePerm:
    """
    The shift (Sigma^r w)(i) = w(i - r) + r.

    **Example:**
    >>> str(shift(AffinePerm((2, 1)), 1))
    '0,3'
    """
    return AffinePerm(tuple(apply(w, i - r) + r for i in range(1, w.size + 1)))


def infinite_sum(p: Perm) -> AffinePerm:
    """The periodic extension of ``p``: its window is ``p`` itself."""
    if p.size == 0:
        raise EmptyPermutationError("the infinite sum of the empty permutation is undefined")
    return AffinePerm(p.values)


# -----------------------------------------------------------------------------------
# Standard decomposition and flattening
# -----------------------------------------------------------------------------------
def standard_decomposition(w: AffinePerm) -> StdDecomposition:
    """
    Reduce each window entry into [1, n] and record the multiple of n removed.

    **Example:**
    >>> dec = standard_decomposition(AffinePerm((2, 7, -2, -1, 9, 6)))
    >>> str(dec.flat), dec.word
    ('214536', (0, 1, -1, -1, 1, 0))
    """
    n = w.size
    residues = []
    word = []
    for value in w.window:
        letter, residue = divmod(value - 1, n)
        residues.append(residue + 1)
        word.append(letter)
    return StdDecomposition(Perm(tuple(residues)), tuple(word))


def from_standard(flat: Perm, word: Sequence[int]) -> AffinePerm:
    """
    Rebuild w from its standard decomposition.

    **Raises:**
    - `WordSumError`: if the word does not sum to zero.
    - `SizeMismatchError`: if the word and the permutation differ in length.
    """
    if len(word) != flat.size:
        raise SizeMismatchError(f"word of length {len(word)} for a permutation of size {flat.size}")
    if sum(word) != 0:
        raise WordSumError(f"word {tuple(word)!r} sums to {sum(word)}, expected 0")
    n = flat.size
    return AffinePerm(tuple(v + n * letter for v, letter in zip(flat.values, word)))


def window_flatten(w: AffinePerm) -> Perm:
    """The permutation order-isomorphic to the window."""
    return flatten(w.window)


def value_set(w: AffinePerm) -> frozenset:
    """The set of window values {w(1), ..., w(n)}."""
    return frozenset(w.window)


def from_flattening(pattern: Perm, values: Iterable[int]) -> AffinePerm:
    """Inverse of ``w -> (window_flatten(w), value_set(w))``."""
    ordered = sorted(values)
    if len(ordered) != pattern.size:
        raise SizeMismatchError(
            f"{len(ordered)} values for a permutation of size {pattern.size}"
        )
    return AffinePerm(tuple(ordered[v - 1] for v in pattern.values))


# -----------------------------------------------------------------------------------
# Pattern containment
# -----------------------------------------------------------------------------------
def default_horizon(w: AffinePerm) -> int:
    """
    Largest gap between consecutive occurrence indices that ever needs searching.

    If a gap exceeds n + 2*Delta, every pair straddling it is a non-inversion
    with room to spare, so translating the tail of the occurrence down by n keeps
    it an occurrence; repeating this shrinks every gap below the bound.
    """
    return w.size + 2 * max_displacement(w)


def find_pattern_occurrence(
    w: AffinePerm, pattern: Perm, horizon: Optional[int] = None
) -> Optional[Tuple[int, ...]]:
    """
    Return the least occurrence of ``pattern`` in ``w`` with first index in [1, n].

    **Parameters:**
    - `w (AffinePerm)`: host.
    - `pattern (Perm)`: a nonempty ordinary permutation.
    - `horizon (int | None)`: largest gap between consecutive indices; defaults to
      ``default_horizon(w)``. Smaller values are rejected.

    **Raises:**
    - `EmptyPermutationError`: for an empty pattern.
    - `HorizonError`: if ``horizon`` is below the default.
    """
    if pattern.size == 0:
        raise EmptyPermutationError("containment needs a nonempty pattern")
    minimum = default_horizon(w)
    if horizon is None:
        horizon = minimum
    elif horizon < minimum:
        raise HorizonError(f"horizon {horizon} is below the certified bound {minimum}")

    def candidates(j: int, previous: Optional[int]) -> Iterable[int]:
        if previous is None:
            return range(1, w.size + 1)
        return range(previous + 1, previous + horizon + 1)

    return search_occurrence(pattern.values, w, candidates)


def contains_finite_pattern(
    w: AffinePerm, pattern: Perm, horizon: Optional[int] = None
) -> bool:
    """
    True iff ``w`` contains the ordinary permutation ``pattern``.

    **Example:**
    >>> contains_finite_pattern(identity(3), Perm.parse("21"))
    False
    """
    return find_pattern_occurrence(w, pattern, horizon) is not None


# -----------------------------------------------------------------------------------
# Decomposability
# -----------------------------------------------------------------------------------
def _is_cut(w: AffinePerm, c: int, delta: int) -> bool:
    # Only indices within delta of c can cross it.
    if any(apply(w, i) > c for i in range(c - delta + 1, c + 1)):
        return False
    return all(apply(w, i) > c for i in range(c + 1, c + delta + 1))


def is_decomposable(w: AffinePerm) -> Optional[Decomposition]:
    """
    Write w as a shift of an infinite sum, if possible.

    c is a cut when w maps every index <= c to a value <= c; w is decomposable
    exactly when a cut exists. The smallest cut c in [0, n-1] is returned as the
    shift and the block is the window on (c, c+n] moved down by c.

    **Returns:**
    - `Decomposition | None`

    **Example:**
    >>> is_decomposable(AffinePerm((2, 4, 3, 1, 6, 5)))
    Decomposition(shift=0, block=Perm(values=(2, 4, 3, 1, 6, 5)))
    """
    delta = max_displacement(w)
    for c in range(w.size):
        if _is_cut(w, c, delta):
            block = Perm(tuple(apply(w, c + i) - c for i in range(1, w.size + 1)))
            return Decomposition(c, block)
    return None


# -----------------------------------------------------------------------------------
# Oscillations
# -----------------------------------------------------------------------------------
INFINITE_OSCILLATION = AffinePerm((3, 0))


def _oscillation_path(t: int) -> int:
    # Walk along the inversion path ... -1, 2, 1, 4, 3, 6, 5 ... of the infinite oscillation.
    return t + 1 if t % 2 else t - 1


def finite_oscillation(k: int) -> Tuple[Perm, ...]:
    """
    The finite oscillations of size k, read off k consecutive vertices of the
    inversion path of the infinite oscillation.

    **Returns:**
    - one permutation for k <= 2, otherwise the two variants in the order
      (3142-like, 2413-like).

    **Example:**
    >>> [str(p) for p in finite_oscillation(5)]
    ['31524', '24153']
    """
    if k < 1:
        raise InvalidPermutationError(f"oscillation size must be at least 1, got {k}")
    variants = []
    for start in (1, 0):
        positions = sorted(_oscillation_path(t) for t in range(start, start + k))
        variant = flatten([apply(INFINITE_OSCILLATION, i) for i in positions])
        if variant not in variants:
            variants.append(variant)
    return tuple(variants)


def oscillation_witness(w: AffinePerm) -> Optional[Perm]:
    """
    An oscillation of size n + 1 contained in w, if any.

    Blocks of a decomposable w have size at most n and an indecomposable pattern
    must fit inside one block, so a witness certifies that w is not decomposable.
    """
    for variant in finite_oscillation(w.size + 1):
        if contains_finite_pattern(w, variant):
            logger.debug("window %s contains oscillation %s", w, variant)
            return variant
    return None
