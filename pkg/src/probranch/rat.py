"""Exact rational arithmetic backend.

Every probability, weight and mass in the package is an exact rational;
no float ever enters a computation.  gmpy2's mpq is used when available
(it is considerably faster than fractions.Fraction on dense pivoting),
with Fraction as a drop-in fallback.  Both types hash and compare
consistently, are always stored in lowest terms and keep a positive
denominator.
"""

from __future__ import annotations

try:
    from gmpy2 import mpq as _mpq

    def rat(num, den=None):
        if den is None:
            if isinstance(num, str):
                return _mpq(num)
            return _mpq(num)
        return _mpq(num, den)

    RAT_BACKEND = "gmpy2"
except ImportError:  # pragma: no cover
    from fractions import Fraction as _mpq

    def rat(num, den=None):
        if den is None:
            return _mpq(num)
        return _mpq(num, den)

    RAT_BACKEND = "fractions"

ZERO = rat(0)
ONE = rat(1)
HALF = rat(1, 2)


def is_rat(value) -> bool:
    return isinstance(value, type(ZERO))


def format_rat(q) -> str:
    """Render as "p/q"; the denominator is always printed."""
    return f"{q.numerator}/{q.denominator}"


def parse_rat(text: str):
    """Parse "p/q" or a plain integer string."""
    text = text.strip()
    if "/" in text:
        num, _, den = text.partition("/")
        d = int(den)
        if d <= 0:
            raise ValueError(f"denominator must be positive: {text!r}")
        return rat(int(num), d)
    return rat(int(text))
