# config.py

"""
Runtime defaults for the affperm package.

``Settings`` groups every tunable knob in one frozen dataclass. Library
functions accept an optional ``settings`` argument and fall back to
``DEFAULT_SETTINGS``; the CLI builds a variant from its flags with
``Settings.replace``.
"""

# Settings is a frozen dataclass; dataclasses.replace derives the CLI variants.
from dataclasses import dataclass, replace
# The critical band is held as an exact fraction.
from fractions import Fraction


@dataclass(frozen=True)
class Settings:
    """
    Defaults shared by the enumeration, series and CLI layers.

    **Fields:**
    - `brute_cap (int)`: largest size accepted by brute-force enumerators of
      bounded affine permutations.
    - `ordinary_cap (int)`: largest size accepted by brute force over S_n.
    - `min_terms (int)`: fewest series terms accepted by schema classification.
    - `tolerance (Fraction)`: distance from 1 inside which tau counts as critical.
    - `diagnostic_tolerance (float)`: relative deviation accepted at the last
      checkpoint of a diagnostic sequence.
    - `dps (int)`: mpmath working precision in decimal digits.
    - `log_level (str)`: level name handed to ``logging.basicConfig`` by the CLI.
    """

    brute_cap: int = 8
    ordinary_cap: int = 10
    min_terms: int = 16
    tolerance: Fraction = Fraction(1, 100)
    diagnostic_tolerance: float = 0.02
    dps: int = 30
    log_level: str = "WARNING"

    def replace(self, **changes) -> "Settings":
        """Return a copy with the given fields changed."""
        return replace(self, **changes)


DEFAULT_SETTINGS = Settings()
