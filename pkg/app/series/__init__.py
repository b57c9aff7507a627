# series.py

"""
Exact power series for sum closed permutation classes.

A sum closed class C with counting sequence f_n and indecomposable counts g_n
forms a sequence schema F = 1/(1 - G). This module keeps those generating
functions as truncated ``Series`` with ``Fraction`` coefficients and derives:

- the indecomposables G = 1 - 1/F,
- the decomposable affine counts F~ = x F'/F, cross-checked against the
  convolution sum_k k g_k f_(n-k),
- exact block-count and first-block distributions,
- a schema classification (subcritical / critical / supercritical) with the
  constants tau, rho, alpha, beta,
- numeric diagnostics comparing finite-n ratios to their asymptotic targets.

Exact arithmetic is used for every transform; floating point (through mpmath)
only appears in targets, root finding and the reports.
"""

# -----------------------------------------------------------------------------------
# Import Statements
# -----------------------------------------------------------------------------------
# Class files are JSON objects holding an f or g coefficient list.
import json
import logging
# ClassSpec is the contract every built-in class implements.
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
# Series coefficients are exact rationals; floats appear only in reports.
from fractions import Fraction
from math import comb, factorial
# Rational covers int and Fraction scalars in series arithmetic.
from numbers import Rational
from pathlib import Path
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

# mpmath: bisection for G(rho) = 1 and evaluation at working precision.
import mpmath
# sympy: closed forms of G, exact tau = G(r-) and the bivariate expansion.
import sympy

# Precision, tolerances and term minimums come from the shared settings.
from app.config import DEFAULT_SETTINGS, Settings
# The tables and both closed formulas back the bounded-total diagnostics.
from app.enumeration import (
    CountMethodFactory,
    derangement_eulerian_table,
    eulerian_table,
)
from app.exceptions import (
    AffpermError,
    ClassificationError,
    ClassSpecError,
    InvariantViolation,
    SizeCapError,
)

logger = logging.getLogger(__name__)

X = sympy.Symbol("x", positive=True)


# -----------------------------------------------------------------------------------
# Series
# -----------------------------------------------------------------------------------
def _integral(values: Sequence[Fraction]) -> Optional[List[int]]:
    if all(v.denominator == 1 for v in values):
        return [v.numerator for v in values]
    return None


def _convolve(a: Sequence[Fraction], b: Sequence[Fraction], order: int) -> List[Fraction]:
    ints_a, ints_b = _integral(a[: order + 1]), _integral(b[: order + 1])
    left, right = (ints_a, ints_b) if ints_a is not None and ints_b is not None else (a, b)
    out = []
    for n in range(order + 1):
        out.append(sum(left[k] * right[n - k] for k in range(n + 1)))
    return [Fraction(v) for v in out]


class Series:
    """
    A power series truncated at order N, with exact rational coefficients c_0..c_N.

    Binary operations truncate to the smaller order. Coefficients are stored as
    ``Fraction``; integer-valued inputs take an integer fast path inside
    products and reciprocals.

    **Example:**
    >>> F = Series([1, 1, 2, 5, 14])
    >>> (1 - 1 / F).coefficients
    (Fraction(0, 1), Fraction(1, 1), Fraction(1, 1), Fraction(2, 1), Fraction(5, 1))
    """

    __slots__ = ("_coefficients",)

    def __init__(self, coefficients: Iterable[Union[int, Fraction]]) -> None:
        values = tuple(Fraction(c) for c in coefficients)
        if not values:
            raise AffpermError("a series needs at least its constant term")
        self._coefficients = values

    # --- construction -------------------------------------------------------------
    @classmethod
    def constant(cls, value: Union[int, Fraction], order: int) -> "Series":
        return cls([value] + [0] * order)

    @classmethod
    def monomial(cls, degree: int, order: int, coefficient: Union[int, Fraction] = 1) -> "Series":
        return cls([coefficient if i == degree else 0 for i in range(order + 1)])

    # --- access -------------------------------------------------------------------
    @property
    def coefficients(self) -> Tuple[Fraction, ...]:
        return self._coefficients

    @property
    def order(self) -> int:
        return len(self._coefficients) - 1

    def __getitem__(self, n: int) -> Fraction:
        if n < 0:
            return Fraction(0)
        return self._coefficients[n]

    def __len__(self) -> int:
        return len(self._coefficients)

    def __iter__(self):
        return iter(self._coefficients)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return self._coefficients == other._coefficients

    def __hash__(self) -> int:
        return hash(self._coefficients)

    def __repr__(self) -> str:
        return f"Series({[str(c) for c in self._coefficients]})"

    def truncate(self, order: int) -> "Series":
        return Series(self._coefficients[: order + 1])

    def as_integers(self) -> Tuple[int, ...]:
        """Coefficients as ints; raises if any is not integral."""
        ints = _integral(self._coefficients)
        if ints is None:
            raise AffpermError("series has non-integer coefficients")
        return tuple(ints)

    # --- arithmetic ---------------------------------------------------------------
    def _coerce(self, other) -> "Series":
        if isinstance(other, Series):
            return other
        if isinstance(other, (int, Rational)):
            return Series.constant(Fraction(other), self.order)
        return NotImplemented

    def __add__(self, other) -> "Series":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        order = min(self.order, other.order)
        return Series(self[n] + other[n] for n in range(order + 1))

    __radd__ = __add__

    def __neg__(self) -> "Series":
        return Series(-c for c in self._coefficients)

    def __sub__(self, other) -> "Series":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Series":
        return (-self) + other

    def __mul__(self, other) -> "Series":
        if isinstance(other, (int, Rational)):
            return Series(c * other for c in self._coefficients)
        if not isinstance(other, Series):
            return NotImplemented
        order = min(self.order, other.order)
        return Series(_convolve(self._coefficients, other._coefficients, order))

    __rmul__ = __mul__

    def reciprocal(self) -> "Series":
        """
        1/S through the same order.

        **Raises:**
        - `AffpermError`: if the constant term is zero.
        """
        a = self._coefficients
        if a[0] == 0:
            raise AffpermError("reciprocal needs a nonzero constant term")
        ints = _integral(a)
        if ints is not None and ints[0] in (1, -1):
            lead = ints[0]
            b = [lead]
            for n in range(1, self.order + 1):
                b.append(-lead * sum(ints[k] * b[n - k] for k in range(1, n + 1)))
            return Series(b)
        inverse = 1 / a[0]
        b = [inverse]
        for n in range(1, self.order + 1):
            b.append(-inverse * sum(a[k] * b[n - k] for k in range(1, n + 1)))
        return Series(b)

    def __truediv__(self, other) -> "Series":
        if isinstance(other, (int, Rational)):
            return Series(c / other for c in self._coefficients)
        if not isinstance(other, Series):
            return NotImplemented
        return self * other.reciprocal()

    def __rtruediv__(self, other) -> "Series":
        return self.reciprocal() * other

    def derivative(self) -> "Series":
        """S' through order N-1 (order 0 for a constant)."""
        if self.order == 0:
            return Series([0])
        return Series(n * self[n] for n in range(1, self.order + 1))

    def x_derivative(self) -> "Series":
        """x S' through order N."""
        return Series(n * c for n, c in enumerate(self._coefficients))

    def x_log_derivative(self) -> "Series":
        """x S'/S = x d/dx log S through order N."""
        return self.x_derivative() / self

    def power(self, exponent: Union[int, Fraction]) -> "Series":
        """
        S**exponent for a series with constant term 1, any rational exponent.

        Uses the recurrence n b_n = sum_{k=1}^{n} ((exponent+1) k - n) a_k b_(n-k),
        which only touches the nonzero a_k.
        """
        a = self._coefficients
        if a[0] != 1:
            raise AffpermError("rational powers need constant term 1")
        exponent = Fraction(exponent)
        support = [k for k in range(1, len(a)) if a[k] != 0]
        b = [Fraction(1)]
        for n in range(1, self.order + 1):
            total = sum(((exponent + 1) * k - n) * a[k] * b[n - k] for k in support if k <= n)
            b.append(total / n)
        return Series(b)

    def shift_down(self, k: int) -> "Series":
        """Divide by x**k; the first k coefficients must vanish."""
        if any(self._coefficients[:k]):
            raise AffpermError(f"cannot divide by x**{k}: low coefficients are nonzero")
        return Series(self._coefficients[k:])

    def evaluate(self, x):
        """Horner evaluation of the truncated polynomial at ``x`` (Fraction or mpf)."""
        total = 0
        for c in reversed(self._coefficients):
            if isinstance(x, Rational):
                total = total * x + c
            else:
                total = total * x + mpmath.mpf(c.numerator) / c.denominator
        return total


# -----------------------------------------------------------------------------------
# Transforms between F, G and F~
# -----------------------------------------------------------------------------------
def _check_class(f: Series) -> None:
    if f[0] != 1:
        raise ClassSpecError(f"a class series needs f_0 = 1, got {f[0]}")


def indecomposables_from_class(f: Series) -> Series:
    """
    G = 1 - 1/F: the indecomposable counts of a sum closed class.

    Negative coefficients mean ``f`` is not a sum closed class; they are logged,
    not rejected.

    **Example:**
    >>> indecomposables_from_class(Series([1, 1, 2, 4, 8])).as_integers()
    (0, 1, 1, 1, 1)
    """
    _check_class(f)
    g = 1 - f.reciprocal()
    if any(c < 0 for c in g):
        logger.warning("indecomposable counts have negative entries; input is not a sum closed class")
    return g


def class_from_indecomposables(g: Series) -> Series:
    """F = 1/(1 - G)."""
    if g[0] != 0:
        raise ClassSpecError(f"indecomposable series needs g_0 = 0, got {g[0]}")
    return (1 - g).reciprocal()


def affine_counts_log_derivative(f: Series) -> Series:
    """F~ = x F'/F."""
    _check_class(f)
    return f.x_log_derivative()


def affine_counts_convolution(f: Series, g: Optional[Series] = None) -> Series:
    """f~_n = sum_{k=1}^{n} k g_k f_(n-k), with f~_0 = 0."""
    _check_class(f)
    if g is None:
        g = indecomposables_from_class(f)
    return g.x_derivative() * f


def affine_from_class(f: Series) -> Series:
    """
    Decomposable affine counts f~_n of a sum closed class, n = 0..N.

    Both the log-derivative and the convolution are computed; they must agree.

    **Raises:**
    - `InvariantViolation`: if the two computations differ.

    **Example:**
    >>> affine_from_class(Series([1, 1, 2, 4, 8])).as_integers()
    (0, 1, 3, 7, 15)
    """
    by_log = affine_counts_log_derivative(f)
    by_sum = affine_counts_convolution(f)
    if by_log != by_sum:
        raise InvariantViolation("x F'/F and sum k g_k f_(n-k) disagree")
    return by_log


def affine_bounds_hold(f: Series, g: Series, affine: Series) -> bool:
    """max(n g_n, f_n) <= f~_n <= n f_n for 1 <= n <= N."""
    order = min(f.order, g.order, affine.order)
    return all(
        max(n * g[n], f[n]) <= affine[n] <= n * f[n] for n in range(1, order + 1)
    )


# -----------------------------------------------------------------------------------
# Block statistics
# -----------------------------------------------------------------------------------
def block_distribution(f: Series, n: int) -> Tuple[Fraction, ...]:
    """
    P[chi_n = k] = [x^n] G^k / f_n for k = 0..n.

    **Example:**
    >>> block_distribution(Series([1, 1, 2, 4]), 3)[1:]
    (Fraction(1, 4), Fraction(1, 2), Fraction(1, 4))
    """
    f, total = _prepare_distribution(f, n)
    g = indecomposables_from_class(f)
    probabilities = [Fraction(1) if n == 0 else Fraction(0)]
    power = Series.constant(1, n)
    for _ in range(1, n + 1):
        power = power * g
        probabilities.append(power[n] / total)
    return tuple(probabilities)


def first_block_distribution(f: Series, n: int) -> Tuple[Fraction, ...]:
    """P[a(pi) = j] = g_j f_(n-j) / f_n for j = 0..n, pi uniform in C_n (n >= 1)."""
    f, total = _prepare_distribution(f, n)
    if n == 0:
        raise AffpermError("the empty permutation has no first block")
    g = indecomposables_from_class(f)
    return tuple(g[j] * f[n - j] / total for j in range(n + 1))


def _prepare_distribution(f: Series, n: int) -> Tuple[Series, Fraction]:
    _check_class(f)
    if not 0 <= n <= f.order:
        raise AffpermError(f"n={n} outside the series order {f.order}")
    if f[n] <= 0:
        raise AffpermError(f"f_{n} = {f[n]} has no uniform distribution")
    return f.truncate(n), f[n]


class BlockMoments(NamedTuple):
    mean: Fraction
    variance: Fraction


def block_count_moments(f: Series, g: Optional[Series] = None) -> Tuple[BlockMoments, ...]:
    """
    Exact mean and variance of chi_n for every n = 1..N.

    E[chi_n] = [x^n] G F^2 / f_n and E[chi_n^2] = [x^n] G (1+G) F^3 / f_n.
    """
    _check_class(f)
    if g is None:
        g = indecomposables_from_class(f)
    first = g * f * f
    second = g * (1 + g) * f * f * f
    moments = [BlockMoments(Fraction(0), Fraction(0))]
    for n in range(1, f.order + 1):
        mean = first[n] / f[n] if f[n] else Fraction(0)
        square = second[n] / f[n] if f[n] else Fraction(0)
        moments.append(BlockMoments(mean, square - mean * mean))
    return tuple(moments)


def limiting_block_law(tau: float, k: int) -> float:
    """(1-tau)^2 k tau^(k-1): limiting P[chi = k] for a subcritical class."""
    return (1 - tau) ** 2 * k * tau ** (k - 1)


# -----------------------------------------------------------------------------------
# Class specifications
# -----------------------------------------------------------------------------------
class ClassSpec(ABC):
    """
    A sum closed permutation class given by its generating functions.

    Subclasses provide coefficients by overriding ``f_series`` or ``g_series``
    (the other is derived). ``g_closed`` is an optional sympy expression for G
    in the symbol ``X`` and ``radius`` its exact radius of convergence; with
    both present, classification is exact.
    """

    name: str = ""
    g_closed: Optional[sympy.Expr] = None
    radius: Optional[sympy.Expr] = None

    def f_series(self, order: int) -> Series:
        return class_from_indecomposables(self.g_series(order))

    def g_series(self, order: int) -> Series:
        return indecomposables_from_class(self.f_series(order))

    def affine_series(self, order: int) -> Series:
        return affine_from_class(self.f_series(order))

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name={self.name!r})"


class ClassSpecFactory:
    """Registry of the built-in classes keyed by name."""

    # Lowercase class name -> ClassSpec subclass; file: classes are never registered.
    _classes: Dict[str, type] = {}

    @classmethod
    def register_class(cls, class_name: str):
        def decorator(subclass):
            key = class_name.lower()
            if key in cls._classes:
                raise ValueError(f"Class '{class_name}' is already registered.")
            subclass.name = key  # Reports show the registered name.
            cls._classes[key] = subclass
            return subclass
        return decorator

    @classmethod
    def available(cls) -> Tuple[str, ...]:
        return tuple(cls._classes)

    @classmethod
    def create_class(cls, class_name: str) -> ClassSpec:
        """
        Instantiate a built-in class, or load ``file:<path>``.

        **Raises:**
        - `ClassSpecError`: for unknown names, listing the built-ins.
        """
        # file:<path> bypasses the registry and reads coefficients from JSON.
        if class_name.startswith("file:"):
            return load_class_spec(class_name[len("file:"):])
        class_type = cls._classes.get(class_name.lower())
        if not class_type:
            available = ", ".join(cls._classes.keys())
            raise ClassSpecError(f"Unknown class: '{class_name}'. Available classes: {available}")
        return class_type()


_CATALAN_G = (1 - sympy.sqrt(1 - 4 * X)) / 2


def _catalan_g(order: int) -> Series:
    root = Series([1, -4] + [0] * max(order - 1, 0)).truncate(order).power(Fraction(1, 2))
    return (1 - root) / 2


@ClassSpecFactory.register_class("catalan")
class CatalanClass(ClassSpec):
    """S(321): Catalan numbers, G = (1 - sqrt(1-4x))/2."""

    g_closed = _CATALAN_G
    radius = sympy.Rational(1, 4)

    def g_series(self, order: int) -> Series:
        return _catalan_g(order)


@ClassSpecFactory.register_class("layered")
class LayeredClass(ClassSpec):
    """S(312, 231): blocks are decreasing runs, G = x/(1-x)."""

    g_closed = X / (1 - X)
    radius = sympy.Integer(1)

    def g_series(self, order: int) -> Series:
        return Series([0] + [1] * order)


@ClassSpecFactory.register_class("separable")
class SeparableClass(ClassSpec):
    """S(3142, 2413): large Schroeder numbers, F = (3 - x - sqrt(1-6x+x^2))/2."""

    g_closed = 1 - 2 / (3 - X - sympy.sqrt(1 - 6 * X + X ** 2))
    radius = 3 - 2 * sympy.sqrt(2)

    def f_series(self, order: int) -> Series:
        base = Series(([1, -6, 1] + [0] * order)[: order + 1])
        return (3 - Series.monomial(1, order) - base.power(Fraction(1, 2))) / 2


@ClassSpecFactory.register_class("s3142")
class Avoid3142Class(ClassSpec):
    """S(3142): F = 32x / (1 + 20x - 8x^2 - (1-8x)^(3/2))."""

    g_closed = 1 - (1 + 20 * X - 8 * X ** 2 - (1 - 8 * X) ** sympy.Rational(3, 2)) / (32 * X)
    radius = sympy.Rational(1, 8)

    def f_series(self, order: int) -> Series:
        top = order + 1
        base = Series(([1, -8] + [0] * top)[: top + 1])
        denominator = Series(([1, 20, -8] + [0] * top)[: top + 1]) - base.power(Fraction(3, 2))
        return 32 / denominator.shift_down(1)


@ClassSpecFactory.register_class("fibonacci2")
class FibonacciClass(ClassSpec):
    """S(321, 312, 231): blocks 1 and 21, G = x + x^2."""

    g_closed = X + X ** 2
    radius = sympy.oo

    def g_series(self, order: int) -> Series:
        return Series(([0, 1, 1] + [0] * order)[: order + 1])


@ClassSpecFactory.register_class("full")
class FullClass(ClassSpec):
    """All permutations: f_n = n!. No closed form; classification is estimated."""

    def f_series(self, order: int) -> Series:
        return Series(factorial(n) for n in range(order + 1))


CRITICAL_EXTRA = (0, 0, 0, 1, 8, 57, 419, 3315, 6084)


@ClassSpecFactory.register_class("critical-example")
class CriticalExampleClass(ClassSpec):
    """
    S(321) indecomposables plus extra indecomposables up to size 8, chosen so
    that G(1/4) = 1 exactly.
    """

    g_closed = _CATALAN_G + sum(c * X ** i for i, c in enumerate(CRITICAL_EXTRA))
    radius = sympy.Rational(1, 4)

    def g_series(self, order: int) -> Series:
        extra = Series((list(CRITICAL_EXTRA) + [0] * order)[: order + 1])
        return _catalan_g(order) + extra


class CoefficientClass(ClassSpec):
    """A class given by an explicit list of f_n or g_n (loaded from JSON)."""

    def __init__(self, name: str, f: Optional[Sequence[int]] = None, g: Optional[Sequence[int]] = None) -> None:
        if (f is None) == (g is None):
            raise ClassSpecError("a class file needs exactly one of 'f' and 'g'")
        self.name = name
        self._f = Series(f) if f is not None else None
        self._g = Series(g) if g is not None else None
        if self._f is not None:
            _check_class(self._f)
        if self._g is not None and self._g[0] != 0:
            raise ClassSpecError(f"'g' must start with g_0 = 0, got {self._g[0]}")

    @property
    def available_order(self) -> int:
        return (self._f if self._f is not None else self._g).order

    def _limit(self, order: int) -> int:
        if order > self.available_order:
            raise ClassSpecError(
                f"class '{self.name}' has coefficients up to n={self.available_order}, asked for {order}"
            )
        return order

    def f_series(self, order: int) -> Series:
        if self._f is not None:
            return self._f.truncate(self._limit(order))
        return class_from_indecomposables(self._g.truncate(self._limit(order)))

    def g_series(self, order: int) -> Series:
        if self._g is not None:
            return self._g.truncate(self._limit(order))
        return indecomposables_from_class(self._f.truncate(self._limit(order)))


def load_class_spec(path: Union[str, Path]) -> CoefficientClass:
    """
    Read ``{"name": ..., "f": [...]}`` or ``{"name": ..., "g": [...]}``.

    **Raises:**
    - `ClassSpecError`: for unreadable files or malformed content.
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ClassSpecError(f"cannot read class file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ClassSpecError(f"class file {path} must hold a JSON object")
    values = {key: data.get(key) for key in ("f", "g")}
    for key, value in values.items():
        if value is not None and (
            not isinstance(value, list) or not all(isinstance(v, int) for v in value)
        ):
            raise ClassSpecError(f"'{key}' must be a list of integers")
    return CoefficientClass(str(data.get("name", Path(path).stem)), f=values["f"], g=values["g"])


# -----------------------------------------------------------------------------------
# Schema classification
# -----------------------------------------------------------------------------------
SUBCRITICAL = "subcritical"
CRITICAL = "critical"
CRITICAL_UNCERTAIN = "critical-uncertain"
SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class SchemaReport:
    """
    Outcome of ``schema_classify``.

    ``radius`` and ``tau`` are floats (``inf`` allowed); ``tau_text`` keeps the
    exact value when it was computed symbolically. ``rho``, ``alpha`` and
    ``beta`` are set for supercritical classes only.
    """

    name: str
    classification: str
    radius: float
    tau: float
    tau_text: str
    exact: bool
    tolerance: str
    rho: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    g_at_rho: Optional[float] = None

    def to_dict(self) -> dict:
        return {key: _json_float(value) for key, value in asdict(self).items()}

    def lines(self) -> List[str]:
        head = f"{self.name}: {self.classification} tau={self.tau_text} r={_fmt(self.radius)}"
        out = [head]
        if self.rho is not None:
            out.append(f"rho={_fmt(self.rho)} alpha={_fmt(self.alpha)} beta={_fmt(self.beta)}")
        return out


def _json_float(value):
    if isinstance(value, float) and value in (float("inf"), float("-inf")):
        return "inf" if value > 0 else "-inf"
    return value


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return "none"
    if value == float("inf"):
        return "inf"
    return mpmath.nstr(mpmath.mpf(value), 12)


def _exact_tau(expr: sympy.Expr, radius: sympy.Expr) -> sympy.Expr:
    if radius == sympy.oo:
        return sympy.limit(expr, X, sympy.oo)
    value = sympy.simplify(expr.subs(X, radius))
    if value.is_finite:
        return value
    return sympy.limit(expr, X, radius, dir="-")


def _supercritical_constants(evaluate, derivative, second, upper, settings: Settings):
    """Root of G = 1 on (0, upper) by bisection, and the constants alpha, beta."""
    with mpmath.workdps(settings.dps):
        low = mpmath.mpf(0)
        if upper == float("inf"):
            high = mpmath.mpf(1)
            while evaluate(high) <= 1:
                high *= 2
        else:
            limit = mpmath.mpf(upper)
            step = 1
            high = limit / 2
            while evaluate(high) <= 1:
                step += 1
                if step > settings.dps * 4:
                    raise ClassificationError("no root of G = 1 below the radius")
                high = limit * (1 - mpmath.mpf(2) ** -step)
        rho = mpmath.findroot(lambda t: evaluate(t) - 1, (low, high), solver="bisect", verify=False)
        g1 = derivative(rho)
        g2 = second(rho)
        alpha = 1 / (rho * g1)
        beta = (rho * g2 + g1 - rho * g1 ** 2) / (rho ** 2 * g1 ** 3)
        return float(rho), float(alpha), float(beta), float(evaluate(rho))


def estimate_radius(g: Series) -> float:
    """
    Average of g_n/g_(n+1) over the last quarter of the available terms.

    An estimate only; ``inf`` when no consecutive nonzero pair remains there.
    """
    order = g.order
    start = max(1, order - order // 4)
    ratios = [
        g[n] / g[n + 1] for n in range(start, order) if g[n] != 0 and g[n + 1] != 0
    ]
    if not ratios:
        return float("inf")
    return float(sum(ratios) / len(ratios))


def schema_classify(spec: ClassSpec, terms: int, tolerance: Optional[Fraction] = None,
                    settings: Settings = DEFAULT_SETTINGS) -> SchemaReport:
    """
    Decide whether a class is a subcritical, critical or supercritical schema.

    With a closed form for G the value tau = G(r-) is exact and rho is the root
    of G = 1 found by bisection. Otherwise r is estimated from coefficient
    ratios and tau by summing the truncated series at that r. Either way the
    verdict is ``critical-uncertain`` whenever |tau - 1| <= tolerance, except
    for an exact tau = 1, which is ``critical``.

    **Raises:**
    - `ClassSpecError`: for fewer than ``settings.min_terms`` terms or a class
      without indecomposables.
    """
    if terms < settings.min_terms:
        raise ClassSpecError(f"classification needs at least {settings.min_terms} terms, got {terms}")
    tolerance = settings.tolerance if tolerance is None else Fraction(tolerance)
    g = spec.g_series(terms)
    if not any(g[n] for n in range(1, g.order + 1)):
        raise ClassSpecError(f"class '{spec.name}' has no indecomposables")

    if spec.g_closed is not None and spec.radius is not None:
        report = _classify_closed(spec, tolerance, settings)
    else:
        report = _classify_estimated(spec.name, g, tolerance, settings)
    logger.info("classified %s as %s (tau=%s)", spec.name, report.classification, report.tau_text)
    return report


def _classify_closed(spec: ClassSpec, tolerance: Fraction, settings: Settings) -> SchemaReport:
    tau = _exact_tau(spec.g_closed, spec.radius)
    radius = float("inf") if spec.radius == sympy.oo else float(spec.radius)
    if tau == sympy.oo:
        tau_value = float("inf")
    else:
        tau_value = float(tau)
    # An exact 1 is critical; anything else inside the band stays undecided.
    if tau == 1:
        classification = CRITICAL
    elif abs(tau_value - 1) <= tolerance:
        classification = CRITICAL_UNCERTAIN
    elif tau_value < 1:
        classification = SUBCRITICAL
    else:
        classification = SUPERCRITICAL
    base = dict(
        name=spec.name,
        classification=classification,
        radius=radius,
        tau=tau_value,
        tau_text="inf" if tau_value == float("inf") else str(tau),
        exact=True,
        tolerance=str(tolerance),
    )
    if classification != SUPERCRITICAL:
        return SchemaReport(**base)
    g_first = sympy.diff(spec.g_closed, X)
    g_second = sympy.diff(spec.g_closed, X, 2)
    evaluate = sympy.lambdify(X, spec.g_closed, "mpmath")
    derivative = sympy.lambdify(X, g_first, "mpmath")
    second = sympy.lambdify(X, g_second, "mpmath")
    rho, alpha, beta, g_at_rho = _supercritical_constants(evaluate, derivative, second, radius, settings)
    return SchemaReport(**base, rho=rho, alpha=alpha, beta=beta, g_at_rho=g_at_rho)


def _classify_estimated(name: str, g: Series, tolerance: Fraction, settings: Settings) -> SchemaReport:
    radius = estimate_radius(g)
    if radius == float("inf"):
        tau_value = float("inf")
    else:
        with mpmath.workdps(settings.dps):
            tau_value = float(g.evaluate(mpmath.mpf(radius)))
    if abs(tau_value - 1) <= tolerance:
        classification = CRITICAL_UNCERTAIN
    elif tau_value < 1 - tolerance:
        classification = SUBCRITICAL
    else:
        classification = SUPERCRITICAL
    base = dict(
        name=name,
        classification=classification,
        radius=radius,
        tau=tau_value,
        tau_text=_fmt(tau_value),
        exact=False,
        tolerance=str(tolerance),
    )
    if classification != SUPERCRITICAL:
        return SchemaReport(**base)
    first = g.derivative()
    second = first.derivative()
    rho, alpha, beta, g_at_rho = _supercritical_constants(
        g.evaluate, first.evaluate, second.evaluate, radius, settings
    )
    return SchemaReport(**base, rho=rho, alpha=alpha, beta=beta, g_at_rho=g_at_rho)


# -----------------------------------------------------------------------------------
# Diagnostics
# -----------------------------------------------------------------------------------
@dataclass(frozen=True)
class RatioSequence:
    """
    A finite-n ratio compared with its limit at geometrically spaced checkpoints.

    ``approaches`` holds when the last deviation is within ``tolerance`` of the
    target (relative, or absolute for a zero target) and the deviations never
    increase across the checkpoints.
    """

    name: str
    target: float
    checkpoints: Tuple[Tuple[int, float], ...]
    tolerance: float
    deviations: Tuple[float, ...] = field(init=False)
    non_increasing: bool = field(init=False)
    approaches: bool = field(init=False)

    def __post_init__(self) -> None:
        deviations = tuple(abs(value - self.target) for _, value in self.checkpoints)
        non_increasing = all(b <= a for a, b in zip(deviations, deviations[1:]))
        scale = abs(self.target) if self.target else 1.0
        object.__setattr__(self, "deviations", deviations)
        object.__setattr__(self, "non_increasing", non_increasing)
        object.__setattr__(
            self, "approaches", non_increasing and deviations[-1] <= self.tolerance * scale
        )

    @property
    def last_value(self) -> float:
        return self.checkpoints[-1][1]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "target": self.target,
            "checkpoints": [[n, value] for n, value in self.checkpoints],
            "tolerance": self.tolerance,
            "deviations": list(self.deviations),
            "non_increasing": self.non_increasing,
            "approaches": self.approaches,
        }


@dataclass(frozen=True)
class DiagnosticsReport:
    name: str
    sequences: Tuple[RatioSequence, ...]

    def __getitem__(self, name: str) -> RatioSequence:
        for sequence in self.sequences:
            if sequence.name == name:
                return sequence
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"name": self.name, "sequences": [s.to_dict() for s in self.sequences]}

    def lines(self) -> List[str]:
        out = []
        for s in self.sequences:
            values = " ".join(f"{n}:{_fmt(v)}" for n, v in s.checkpoints)
            out.append(
                f"{s.name} target={_fmt(s.target)} {values} "
                f"deviation={_fmt(s.deviations[-1])} approaches={str(s.approaches).lower()}"
            )
        return out


def checkpoints(terms: int) -> Tuple[int, int, int]:
    """Three geometrically spaced indices ending at ``terms``."""
    return (max(1, terms // 4), max(1, terms // 2), terms)


def _ratio(numerator, denominator) -> float:
    return float(Fraction(numerator) / Fraction(denominator))


def _require(report: SchemaReport, expected: str) -> None:
    if report.classification != expected:
        raise ClassificationError(
            f"class '{report.name}' is {report.classification}, not {expected}"
        )


def subcritical_diagnostics(spec: ClassSpec, terms: int, settings: Settings = DEFAULT_SETTINGS,
                            report: Optional[SchemaReport] = None) -> DiagnosticsReport:
    """
    Compare g_n/f_n with (1-tau)^2, f~_n/((1-tau) n f_n) with 1 and the mean
    number of blocks with (1+tau)/(1-tau); also the first-block masses below
    and above floor(sqrt(n)).

    **Raises:**
    - `ClassificationError`: if the class is not subcritical.
    """
    report = report or schema_classify(spec, max(terms, settings.min_terms), settings=settings)
    _require(report, SUBCRITICAL)
    tau = report.tau
    f = spec.f_series(terms)
    g = spec.g_series(terms)
    affine = affine_counts_convolution(f, g)
    marks = checkpoints(terms)
    tol = settings.diagnostic_tolerance
    mean_numerator = g * f * f

    def small_mass(n: int) -> float:
        cut = int(n ** 0.5)
        return float(sum(g[j] * f[n - j] for j in range(1, cut + 1)) / f[n])

    def large_mass(n: int) -> float:
        cut = int(n ** 0.5)
        return float(sum(g[j] * f[n - j] for j in range(n - cut, n + 1)) / f[n])

    sequences = (
        RatioSequence("g/f", (1 - tau) ** 2, tuple((n, _ratio(g[n], f[n])) for n in marks), tol),
        RatioSequence(
            "ftilde/((1-tau)nf)", 1.0,
            tuple((n, _ratio(affine[n], f[n] * n) / (1 - tau)) for n in marks), tol,
        ),
        RatioSequence(
            "mean_blocks", (1 + tau) / (1 - tau),
            tuple((n, _ratio(mean_numerator[n], f[n])) for n in marks), tol,
        ),
        RatioSequence("P(a<=sqrt n)", tau, tuple((n, small_mass(n)) for n in marks), tol),
        RatioSequence("P(a>=n-sqrt n)", 1 - tau, tuple((n, large_mass(n)) for n in marks), tol),
    )
    return DiagnosticsReport(spec.name, sequences)


def supercritical_diagnostics(spec: ClassSpec, terms: int, settings: Settings = DEFAULT_SETTINGS,
                              report: Optional[SchemaReport] = None) -> DiagnosticsReport:
    """
    Compare f_n rho^n with alpha, f~_n rho^n with 1, and the mean and variance of
    chi_n divided by n with alpha and beta.

    **Raises:**
    - `ClassificationError`: if the class is not supercritical.
    """
    report = report or schema_classify(spec, max(terms, settings.min_terms), settings=settings)
    _require(report, SUPERCRITICAL)
    f = spec.f_series(terms)
    g = spec.g_series(terms)
    affine = affine_counts_convolution(f, g)
    moments = block_count_moments(f, g)
    marks = checkpoints(terms)
    tol = settings.diagnostic_tolerance
    with mpmath.workdps(settings.dps):
        rho = mpmath.mpf(report.rho)

        def scaled(value: Fraction, n: int) -> float:
            return float(mpmath.mpf(value.numerator) / value.denominator * rho ** n)

        sequences = (
            RatioSequence("f*rho^n", report.alpha, tuple((n, scaled(f[n], n)) for n in marks), tol),
            RatioSequence("ftilde*rho^n", 1.0, tuple((n, scaled(affine[n], n)) for n in marks), tol),
            RatioSequence(
                "mean_blocks/n", report.alpha,
                tuple((n, float(moments[n].mean / n)) for n in marks), tol,
            ),
            RatioSequence(
                "var_blocks/n", report.beta,
                tuple((n, float(moments[n].variance / n)) for n in marks), tol,
            ),
        )
    return DiagnosticsReport(spec.name, sequences)


# -----------------------------------------------------------------------------------
# All bounded affine permutations
# -----------------------------------------------------------------------------------
def q_values(N: int) -> Tuple[Fraction, ...]:
    """Q_m = sum_k C(m,k) d(m,k) / (2^m m!) for m = 0..N, exactly."""
    d = derangement_eulerian_table(N, method="recurrence")
    return tuple(
        Fraction(sum(comb(m, k) * d[m, k] for k in range(m + 1)), 2 ** m * factorial(m))
        for m in range(N + 1)
    )


def bounded_totals(N: int) -> Tuple[int, ...]:
    """|S~||_n| for n = 0..N from the derangement formula, with entry 0 set to 0."""
    d = derangement_eulerian_table(N, method="recurrence")
    inner = [sum(comb(m, k) * d[m, k] for k in range(m + 1)) for m in range(N + 1)]
    return (0,) + tuple(
        sum(comb(n, m) * inner[m] for m in range(n + 1)) for n in range(1, N + 1)
    )


def enasym_target() -> float:
    """sqrt(3/(2 pi e))."""
    return float(mpmath.sqrt(3 / (2 * mpmath.pi * mpmath.e)))


def q_target() -> float:
    """(1/e) sqrt(3/(2 pi))."""
    return float(mpmath.sqrt(3 / (2 * mpmath.pi)) / mpmath.e)


def bounded_total_diagnostics(N: int, settings: Settings = DEFAULT_SETTINGS) -> DiagnosticsReport:
    """
    Finite-n view of |S~||_n| ~ sqrt(3/(2 pi e n)) 2^n n!: the sequences Q_m,
    sqrt(m) Q_m and |S~||_n| sqrt(n) / (2^n n!) at checkpoints N/4, N/2, N.
    """
    if N < 4:
        raise AffpermError(f"diagnostics need N >= 4, got {N}")
    q = q_values(N)
    totals = bounded_totals(N)
    marks = checkpoints(N)
    tol = settings.diagnostic_tolerance
    with mpmath.workdps(settings.dps):
        sequences = (
            RatioSequence("Q_m", 0.0, tuple((m, float(q[m])) for m in marks), tol),
            RatioSequence(
                "sqrt(m)Q_m", q_target(),
                tuple((m, float(mpmath.sqrt(m) * mpmath.mpf(q[m].numerator) / q[m].denominator))
                      for m in marks),
                tol,
            ),
            RatioSequence(
                "total*sqrt(n)/(2^n n!)", enasym_target(),
                tuple((n, float(mpmath.sqrt(n) * mpmath.mpf(totals[n]) / (2 ** n * factorial(n))))
                      for n in marks),
                tol,
            ),
        )
    return DiagnosticsReport("bounded-affine", sequences)


def check_bounded_formulas(N: int) -> bool:
    """
    Verify that both closed formulas for |S~||_n| agree for n = 1..N.

    **Raises:**
    - `InvariantViolation`: on the first disagreement.
    """
    for n in range(1, N + 1):
        first = CountMethodFactory.create_method("a", n).execute()
        second = CountMethodFactory.create_method("b", n).execute()
        if first != second:
            raise InvariantViolation(f"formula (a) gives {first} but formula (b) gives {second} at n={n}")
    return True


def derangement_moments(n: int) -> BlockMoments:
    """Exact mean and variance of the excedance count of a uniform derangement of [n]."""
    d = derangement_eulerian_table(n, method="recurrence")
    row = d.row(n)
    total = sum(row)
    if total == 0:
        raise AffpermError(f"there are no derangements of size {n}")
    mean = Fraction(sum(k * c for k, c in enumerate(row)), total)
    square = Fraction(sum(k * k * c for k, c in enumerate(row)), total)
    return BlockMoments(mean, square - mean * mean)


# -----------------------------------------------------------------------------------
# Bivariate generating functions
# -----------------------------------------------------------------------------------
class BivariateReport(NamedTuple):
    ok: bool
    eulerian_rows: Tuple[Tuple[int, ...], ...]
    derangement_rows: Tuple[Tuple[int, ...], ...]


BIVARIATE_CAP = 12


def _row_from_poly(expr: sympy.Expr, u: sympy.Symbol, n: int) -> Tuple[int, ...]:
    coefficients = sympy.Poly(sympy.expand(expr), u).all_coeffs()[::-1]
    row = [int(c) for c in coefficients] + [0] * (n + 1 - len(coefficients))
    return tuple(row[: n + 1])


def bivariate_check(N: int) -> BivariateReport:
    """
    Expand A(z,u) = (u-1)/(u - e^{(u-1)z}) and D(z,u) = e^{-z} A(z,u) exactly and
    compare n! [z^n u^k] with the Eulerian and derangement Eulerian tables.

    Writing u - e^{(u-1)z} = (u-1)(1 - H) with H = sum_{j>=1} (u-1)^(j-1) z^j / j!
    gives A = 1/(1 - H), expanded coefficientwise.
    """
    if N > BIVARIATE_CAP:
        raise SizeCapError(f"bivariate expansion is capped at N={BIVARIATE_CAP}, got {N}")
    u = sympy.Symbol("u")
    h = [sympy.Integer(0)] + [(u - 1) ** (j - 1) / sympy.factorial(j) for j in range(1, N + 1)]
    a_coefficients = [sympy.Integer(1)]
    for n in range(1, N + 1):
        a_coefficients.append(sympy.expand(sum(h[j] * a_coefficients[n - j] for j in range(1, n + 1))))
    d_coefficients = [
        sympy.expand(sum(sympy.Integer(-1) ** j / sympy.factorial(j) * a_coefficients[n - j]
                         for j in range(n + 1)))
        for n in range(N + 1)
    ]
    eulerian_rows = tuple(
        _row_from_poly(sympy.factorial(n) * a_coefficients[n], u, n) for n in range(N + 1)
    )
    derangement_rows = tuple(
        _row_from_poly(sympy.factorial(n) * d_coefficients[n], u, n) for n in range(N + 1)
    )
    ok = (
        eulerian_rows == eulerian_table(N).rows
        and derangement_rows == derangement_eulerian_table(N).rows
    )
    return BivariateReport(ok, eulerian_rows, derangement_rows)
