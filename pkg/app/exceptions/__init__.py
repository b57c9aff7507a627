# exceptions.py

"""
Exception hierarchy for the affperm package.

Every user-facing validation problem raises a subclass of ``AffpermError``,
which is itself a ``ValueError`` so callers that only know about ``ValueError``
keep working. The CLI maps ``AffpermError`` to exit code 2 and
``InvariantViolation`` to exit code 3.
"""


class AffpermError(ValueError):
    """Base class for invalid input to any affperm operation."""


# -----------------------------------------------------------------------------------
# Ordinary permutations
# -----------------------------------------------------------------------------------
class InvalidPermutationError(AffpermError):
    """The values do not form a permutation of {1, ..., n}."""


class EmptyPermutationError(AffpermError):
    """An operation that needs at least one entry received the empty permutation."""


# -----------------------------------------------------------------------------------
# Affine permutations
# -----------------------------------------------------------------------------------
class DistinctnessError(AffpermError):
    """Two window entries coincide modulo the size."""


class CenteringError(AffpermError):
    """The window does not sum to n(n+1)/2."""


class SizeMismatchError(AffpermError):
    """An explicit size disagrees with the number of window entries."""


class WordSumError(AffpermError):
    """A standard-decomposition word does not sum to zero."""


class HorizonError(AffpermError):
    """A containment horizon smaller than the certified default was requested."""


# -----------------------------------------------------------------------------------
# Counting and series
# -----------------------------------------------------------------------------------
class SizeCapError(AffpermError):
    """A brute-force enumeration was asked for a size above its cap."""


class UnknownMethodError(AffpermError):
    """A counting method name is not registered."""


class ClassSpecError(AffpermError):
    """A class specification is unknown, malformed or degenerate."""


class ClassificationError(AffpermError):
    """A diagnostic was requested for a class of the wrong schema type."""


class InvariantViolation(RuntimeError):
    """Two independent computations that must agree did not."""
