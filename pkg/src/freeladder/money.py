"""Exact, non-negative currency amounts stored as integer cents."""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError

_DOLLARS_RE = re.compile(r"^\s*\$?(\d+)(?:\.(\d{1,2}))?\s*$")


@dataclass(frozen=True, order=True)
class Money:
    """A currency amount in whole cents.

    Arithmetic never touches floating point. Amounts are never negative:
    a subtraction that would go below zero raises ``ParameterError``.

    >>> Money.parse("1.50") + Money(5)
    Money(cents=155)
    >>> str(Money(91_000_000))
    '$910,000.00'
    """

    cents: int = 0

    def __post_init__(self):
        if isinstance(self.cents, bool) or not isinstance(self.cents, int):
            raise ParameterError(f"cents must be an int, got {self.cents!r}")
        if self.cents < 0:
            raise ParameterError(f"money cannot be negative: {self.cents} cents")

    @classmethod
    def parse(cls, text: str) -> Money:
        """Parse decimal dollars with at most two fraction digits."""
        m = _DOLLARS_RE.match(str(text).replace("_", "").replace("'", "").replace(",", ""))
        if not m:
            raise ParameterError(
                f"not a dollar amount with at most 2 decimals: {text!r}")
        whole, frac = m.group(1), (m.group(2) or "").ljust(2, "0")
        return cls(int(whole) * 100 + int(frac))

    @classmethod
    def dollars(cls, amount: int) -> Money:
        return cls(amount * 100)

    @property
    def as_dollars(self) -> float:
        """Float view for display and for real-valued formulas only."""
        return self.cents / 100

    def __add__(self, other: Money) -> Money:
        if not isinstance(other, Money):
            return NotImplemented
        return Money(self.cents + other.cents)

    def __sub__(self, other: Money) -> Money:
        if not isinstance(other, Money):
            return NotImplemented
        return Money(self.cents - other.cents)

    def __mul__(self, k: int) -> Money:
        if isinstance(k, bool) or not isinstance(k, int):
            return NotImplemented
        return Money(self.cents * k)

    __rmul__ = __mul__

    def __bool__(self):
        return self.cents != 0

    def __str__(self):
        return f"${self.cents // 100:,}.{self.cents % 100:02d}"


ZERO = Money(0)


def as_fraction(value) -> Fraction:
    """Coerce a rate given as Fraction, int, decimal string or float to a Fraction.

    Floats go through ``repr`` so that ``0.13`` becomes exactly 13/100.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ParameterError(f"not a rational number: {value!r}") from exc
