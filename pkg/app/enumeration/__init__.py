# enumeration.py

"""
Exact counting of ordinary and bounded affine permutations.

Tables of Eulerian and derangement Eulerian numbers are built from
recurrences or inclusion-exclusion; the number of bounded affine
permutations of size n is available through two closed formulas and through
brute-force enumeration of standard decompositions. The three counting
methods are registered in ``CountMethodFactory`` and selected by name.

All counts are Python integers; nothing in this module touches floating point
except ``growth_trend``, which only reports.
"""

# -----------------------------------------------------------------------------------
# Import Statements
# -----------------------------------------------------------------------------------
import itertools
import logging
# ABC and abstractmethod define the contract every counting method implements.
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
# Tables are pure functions of N, so they are computed once per size.
from functools import lru_cache
# Exact binomials and factorials keep every count a Python int.
from math import comb, factorial
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

# mpmath is only used for the n-th roots reported by growth_trend.
import mpmath

# Brute force builds bounded affine permutations from standard decompositions.
from app.affine import AffinePerm, contains_finite_pattern, from_standard
# Size caps come from the shared settings.
from app.config import DEFAULT_SETTINGS, Settings
from app.exceptions import AffpermError, EmptyPermutationError, SizeCapError, UnknownMethodError
from app.permcore import Perm, all_permutations, enumerate_avoiders, exc_stats, sum_blocks

logger = logging.getLogger(__name__)


# -----------------------------------------------------------------------------------
# Count tables
# -----------------------------------------------------------------------------------
@dataclass(frozen=True)
class CountTable:
    """
    A triangular table of non-negative integers, row n holding columns k = 0..n.

    Indexing outside the stored triangle returns 0, so formulas can sum over
    generous ranges.

    **Example:**
    >>> eulerian_table(3).row(3)
    (1, 4, 1, 0)
    >>> eulerian_table(3)[3, 7]
    0
    """

    rows: Tuple[Tuple[int, ...], ...]

    def __getitem__(self, key: Tuple[int, int]) -> int:
        n, k = key
        if 0 <= n < len(self.rows) and 0 <= k < len(self.rows[n]):
            return self.rows[n][k]
        return 0

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def max_n(self) -> int:
        return len(self.rows) - 1

    def row(self, n: int) -> Tuple[int, ...]:
        return self.rows[n]

    def row_sums(self) -> Tuple[int, ...]:
        return tuple(sum(row) for row in self.rows)


@lru_cache(maxsize=None)
def eulerian_table(N: int) -> CountTable:
    """
    Eulerian numbers a(n, k): permutations of [n] with k excedances, n <= N.

    Built with a(n, k) = (k+1) a(n-1, k) + (n-k) a(n-1, k-1) from a(0, 0) = 1.
    """
    if N < 0:
        raise AffpermError(f"table size must be non-negative, got {N}")
    rows: List[Tuple[int, ...]] = [(1,)]
    for n in range(1, N + 1):
        previous = rows[-1]

        def prev(k: int) -> int:
            return previous[k] if 0 <= k < len(previous) else 0

        rows.append(tuple((k + 1) * prev(k) + (n - k) * prev(k - 1) for k in range(n + 1)))
    return CountTable(tuple(rows))


def _alternating_derangement_rows(N: int) -> List[Tuple[int, ...]]:
    a = eulerian_table(N)
    return [
        tuple(
            sum(comb(n, m) * (-1) ** m * a[n - m, k] for m in range(n - k + 1))
            for k in range(n + 1)
        )
        for n in range(N + 1)
    ]


def _recurrence_derangement_rows(N: int) -> List[Tuple[int, ...]]:
    # d(n,k) = k d(n-1,k) + (n-k) d(n-1,k-1) + (n-1) d(n-2,k-1)
    rows: List[Tuple[int, ...]] = [(1,)]

    def entry(n: int, k: int) -> int:
        row = rows[n] if 0 <= n < len(rows) else ()
        return row[k] if 0 <= k < len(row) else 0

    for n in range(1, N + 1):
        rows.append(
            tuple(
                k * entry(n - 1, k) + (n - k) * entry(n - 1, k - 1) + (n - 1) * entry(n - 2, k - 1)
                for k in range(n + 1)
            )
        )
    return rows


@lru_cache(maxsize=None)
def derangement_eulerian_table(N: int, method: str = "alternating") -> CountTable:
    """
    Derangement Eulerian numbers d(n, k): fixed-point-free permutations of [n]
    with k excedances.

    **Parameters:**
    - `N (int)`: largest n.
    - `method (str)`: ``"alternating"`` for the inclusion-exclusion sum
      d(n,k) = sum_m C(n,m) (-1)^m a(n-m,k), or ``"recurrence"`` for the
      quadratic-time three-term recurrence used by large diagnostics.

    **Example:**
    >>> derangement_eulerian_table(4).row(4)
    (0, 1, 7, 1, 0)
    """
    if N < 0:
        raise AffpermError(f"table size must be non-negative, got {N}")
    if method == "alternating":
        rows = _alternating_derangement_rows(N)
    elif method == "recurrence":
        rows = _recurrence_derangement_rows(N)
    else:
        raise UnknownMethodError(
            f"Unsupported table method: '{method}'. Available methods: alternating, recurrence"
        )
    return CountTable(tuple(rows))


def derangement_counts(N: int) -> Tuple[int, ...]:
    """d(n) = sum_m C(n,m) (-1)^m (n-m)! for n = 0..N."""
    return tuple(
        sum(comb(n, m) * (-1) ** m * factorial(n - m) for m in range(n + 1))
        for n in range(N + 1)
    )


def fixed_point_excedance_counts(n: int, settings: Settings = DEFAULT_SETTINGS) -> Dict[Tuple[int, int], int]:
    """Brute-force d^(m)(n, k) keyed by (m, k): fixed points m, excedances k."""
    _check_cap(n, settings.ordinary_cap, "S_n")
    counts = Counter()
    for p in all_permutations(n):
        stats = exc_stats(p)
        counts[stats.fixed_points, stats.excedances] += 1
    return dict(counts)


def fixed_point_excedance_formula(n: int, m: int, k: int) -> int:
    """d^(m)(n, k) = C(n, m) d(n-m, k)."""
    if m > n:
        return 0
    return comb(n, m) * derangement_eulerian_table(n - m)[n - m, k]


# -----------------------------------------------------------------------------------
# Bounded affine permutations
# -----------------------------------------------------------------------------------
def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise SizeCapError(f"brute force over {what} is capped at n={cap}, got n={n}")


def bounded_words(flat: Perm) -> Iterator[Tuple[int, ...]]:
    """
    Yield every word making (flat, word) the standard decomposition of a bounded
    affine permutation: r entries -1 on excedances and r entries +1 below the
    diagonal, zeros elsewhere.
    """
    above = [i for i, v in enumerate(flat.values, start=1) if v > i]
    below = [i for i, v in enumerate(flat.values, start=1) if v < i]
    for r in range(min(len(above), len(below)) + 1):
        for minus in itertools.combinations(above, r):
            for plus in itertools.combinations(below, r):
                word = [0] * flat.size
                for i in minus:
                    word[i - 1] = -1
                for i in plus:
                    word[i - 1] = 1
                yield tuple(word)


def enumerate_bounded_affine(n: int, settings: Settings = DEFAULT_SETTINGS) -> Iterator[AffinePerm]:
    """
    Stream every bounded affine permutation of size n exactly once.

    Flattened permutations are visited in lexicographic order and, for each,
    the admissible words in order of the number of nonzero letters.

    **Raises:**
    - `AffpermError`: for n < 1.
    - `SizeCapError`: for n above ``settings.brute_cap``.
    """
    if n < 1:
        raise AffpermError(f"bounded affine permutations need n >= 1, got {n}")
    _check_cap(n, settings.brute_cap, "bounded affine permutations")
    for flat in all_permutations(n):
        for word in bounded_words(flat):
            yield from_standard(flat, word)


class BoundedAffineCount(ABC):
    """
    Blueprint for a way of computing the number of bounded affine permutations
    of size n. Concrete methods register themselves with ``CountMethodFactory``.
    """

    def __init__(self, n: int, settings: Settings = DEFAULT_SETTINGS) -> None:
        if n < 1:
            raise AffpermError(f"bounded affine permutations need n >= 1, got {n}")
        self.n: int = n
        self.settings: Settings = settings

    @abstractmethod
    def execute(self) -> int:
        """Return the count."""
        pass  # pragma: no cover

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(n={self.n})"


class CountMethodFactory:
    """Registry of counting methods keyed by short names such as ``'a'``."""

    # Lowercase method name -> BoundedAffineCount subclass.
    _methods: Dict[str, type] = {}

    @classmethod
    def register_method(cls, method_name: str):
        """Class decorator registering a ``BoundedAffineCount`` under ``method_name``."""
        def decorator(subclass):
            key = method_name.lower()  # Lookups are case insensitive.
            if key in cls._methods:
                raise ValueError(f"Count method '{method_name}' is already registered.")
            cls._methods[key] = subclass
            return subclass
        return decorator

    @classmethod
    def available(cls) -> Tuple[str, ...]:
        return tuple(cls._methods)

    @classmethod
    def create_method(cls, method_name: str, n: int, settings: Settings = DEFAULT_SETTINGS) -> BoundedAffineCount:
        """
        Build the counting method registered as ``method_name`` (``formula_a`` is
        accepted for ``a``, ``formula_b`` for ``b``).

        **Raises:**
        - `UnknownMethodError`: listing the registered names.
        """
        key = method_name.lower()
        if key.startswith("formula_"):
            key = key[len("formula_"):]  # Long names map onto the short ones.
        method_class = cls._methods.get(key)
        if not method_class:
            # Unknown names list what is registered, in registration order.
            available = ", ".join(cls._methods.keys())
            raise UnknownMethodError(
                f"Unsupported count method: '{method_name}'. Available methods: {available}"
            )
        return method_class(n, settings)


@CountMethodFactory.register_method("a")
class DerangementFormulaCount(BoundedAffineCount):
    """sum_m C(n,m) sum_k C(m,k) d(m,k)."""

    def execute(self) -> int:
        n = self.n
        d = derangement_eulerian_table(n)
        return sum(
            comb(n, m) * sum(comb(m, k) * d[m, k] for k in range(m + 1))
            for m in range(n + 1)
        )


@CountMethodFactory.register_method("b")
class EulerianFormulaCount(BoundedAffineCount):
    """sum_m C(n,m) sum_k C(m, n-k) (-1)^(n-m) a(m,k)."""

    def execute(self) -> int:
        n = self.n
        a = eulerian_table(n)
        return sum(
            comb(n, m) * (-1) ** (n - m) * sum(comb(m, n - k) * a[m, k] for k in range(m + 1))
            for m in range(n + 1)
        )


@CountMethodFactory.register_method("brute")
class BruteForceCount(BoundedAffineCount):
    """Count the stream of ``enumerate_bounded_affine``."""

    def execute(self) -> int:
        _check_cap(self.n, self.settings.brute_cap, "bounded affine permutations")
        return sum(1 for _ in enumerate_bounded_affine(self.n, self.settings))


def count_bounded_affine(n: int, method: str = "a", settings: Settings = DEFAULT_SETTINGS) -> int:
    """
    Number of bounded affine permutations of size n.

    **Example:**
    >>> [count_bounded_affine(n) for n in range(1, 5)]
    [1, 3, 13, 87]
    """
    count = CountMethodFactory.create_method(method, n, settings).execute()
    logger.debug("bounded affine count n=%d method=%s -> %d", n, method, count)
    return count


# -----------------------------------------------------------------------------------
# Pattern-avoiding counts
# -----------------------------------------------------------------------------------
UNIVERSES = ("bounded-affine", "ordinary")


def count_bounded_avoiders(
    n: int,
    patterns: Iterable[Perm],
    universe: str = "bounded-affine",
    settings: Settings = DEFAULT_SETTINGS,
) -> int:
    """
    Count permutations of size n avoiding every pattern in ``patterns``.

    **Parameters:**
    - `n (int)`: size.
    - `patterns (Iterable[Perm])`: nonempty patterns.
    - `universe (str)`: ``"bounded-affine"`` filters ``enumerate_bounded_affine``;
      ``"ordinary"`` counts S_n(R) by backtracking.

    **Raises:**
    - `SizeCapError`: above the relevant cap.
    - `EmptyPermutationError`: for an empty pattern.
    """
    patterns = tuple(patterns)
    if any(p.size == 0 for p in patterns):
        raise EmptyPermutationError("patterns must be nonempty")
    if universe == "ordinary":
        _check_cap(n, settings.ordinary_cap, "S_n")
        return sum(1 for _ in enumerate_avoiders(n, patterns))
    if universe != "bounded-affine":
        raise UnknownMethodError(
            f"Unsupported universe: '{universe}'. Available universes: {', '.join(UNIVERSES)}"
        )
    return sum(
        1
        for w in enumerate_bounded_affine(n, settings)
        if not any(contains_finite_pattern(w, p) for p in patterns)
    )


def indecomposable_counts(N: int, settings: Settings = DEFAULT_SETTINGS) -> Tuple[int, ...]:
    """g(n) = number of sum-indecomposable permutations of [n], n = 0..N, by brute force."""
    _check_cap(N, settings.ordinary_cap, "S_n")
    counts = [0]
    for n in range(1, N + 1):
        counts.append(sum(1 for p in all_permutations(n) if sum_blocks(p).block_count == 1))
    return tuple(counts)


def crites_3142_count(n: int) -> int:
    """sum_{k<n} (n-k)/n C(n-1+k, k) 2^k, the number of affine permutations of size n avoiding 3142."""
    if n < 1:
        raise AffpermError(f"n must be at least 1, got {n}")
    total = sum((n - k) * comb(n - 1 + k, k) * 2 ** k for k in range(n))
    return total // n


def growth_trend(counts: Sequence[int], start: int = 1) -> Tuple[float, ...]:
    """c_n^(1/n) for consecutive counts beginning at index ``start``; a trend, not a limit."""
    return tuple(
        float(mpmath.root(mpmath.mpf(c), n)) if c > 0 else 0.0
        for n, c in enumerate(counts, start=start)
    )
