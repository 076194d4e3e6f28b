"""Parsing and formatting of exact rationals as ``"num/den"`` strings."""

from fractions import Fraction
from numbers import Rational

from urnlaw.errors import ValidationError


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to a Fraction.

    Floats are rejected on purpose: silently importing binary rounding
    errors would break every exact identity downstream.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a rational: {value!r}") from exc
    raise ValidationError(f"not an exact rational: {value!r}")


def format_fraction(value) -> str:
    """Always ``num/den``, even for integers (``"3/1"``)."""
    value = as_fraction(value)
    return f"{value.numerator}/{value.denominator}"


def decimal(value, digits: int = 12) -> float:
    """Float approximation for human-readable side columns only."""
    return round(float(as_fraction(value)), digits)
