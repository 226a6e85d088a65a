"""Signed numbers carried as (sign, log10|x|).

The conductivity bounds involve factors like exp(lambda * t1) with
lambda * t1 ~ 1e8, far outside double range.  Everything that can blow up is
assembled from these instead of floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

LN10 = math.log(10.0)


@dataclass(frozen=True)
class LogNumber:
    sign: int
    log10: float  # log10 of the magnitude; -inf encodes zero

    @classmethod
    def from_float(cls, x: float) -> "LogNumber":
        if x == 0.0:
            return ZERO
        if not math.isfinite(x):
            raise OverflowError(f"cannot represent {x!r}")
        return cls(1 if x > 0 else -1, math.log10(abs(x)))

    @classmethod
    def exp(cls, x: float) -> "LogNumber":
        """e**x without overflow."""
        return cls(1, x / LN10)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0 or self.log10 == -math.inf

    def __float__(self) -> float:
        if self.is_zero:
            return 0.0
        if self.log10 > 308.2547:
            return math.copysign(math.inf, self.sign)
        return self.sign * 10.0**self.log10

    def __neg__(self) -> "LogNumber":
        return LogNumber(-self.sign, self.log10)

    def __mul__(self, other) -> "LogNumber":
        other = _coerce(other)
        if self.is_zero or other.is_zero:
            return ZERO
        return LogNumber(self.sign * other.sign, self.log10 + other.log10)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogNumber":
        other = _coerce(other)
        if other.is_zero:
            raise ZeroDivisionError("division by zero in log domain")
        if self.is_zero:
            return ZERO
        return LogNumber(self.sign * other.sign, self.log10 - other.log10)

    def __rtruediv__(self, other) -> "LogNumber":
        return _coerce(other) / self

    def __pow__(self, p: float) -> "LogNumber":
        if self.is_zero:
            return ZERO if p > 0 else _raise_zero_pow()
        if self.sign < 0 and p != int(p):
            raise ValueError("fractional power of a negative number")
        sign = self.sign if int(p) % 2 else 1
        return LogNumber(sign, self.log10 * p)

    def __add__(self, other) -> "LogNumber":
        other = _coerce(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        big, small = (self, other) if self.log10 >= other.log10 else (other, self)
        gap = small.log10 - big.log10  # <= 0
        ratio = 10.0**gap if gap > -400 else 0.0
        if big.sign == small.sign:
            return LogNumber(big.sign, big.log10 + math.log1p(ratio) / LN10)
        if ratio == 1.0:
            return ZERO
        return LogNumber(big.sign, big.log10 + math.log1p(-ratio) / LN10)

    __radd__ = __add__

    def __sub__(self, other) -> "LogNumber":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "LogNumber":
        return _coerce(other) - self


ZERO = LogNumber(0, -math.inf)


def _coerce(x) -> LogNumber:
    return x if isinstance(x, LogNumber) else LogNumber.from_float(float(x))


def _raise_zero_pow():
    raise ZeroDivisionError("zero raised to a non-positive power")


def log10_expm1(x: float) -> float:
    """log10(exp(x) - 1) for x > 0, valid for arbitrarily large x."""
    if x <= 0:
        raise ValueError("log10_expm1 needs x > 0")
    if x < 30.0:
        return math.log10(math.expm1(x))
    return (x + math.log1p(-math.exp(-x))) / LN10


def log10_expm1_over(x: float) -> float:
    """log10((exp(x) - 1) / x), continuous through x = 0 and safe for any x."""
    if x == 0.0:
        return 0.0
    if x > 30.0:
        return log10_expm1(x) - math.log10(x)
    if x < -700.0:
        return -math.log10(-x)
    return math.log10(math.expm1(x) / x)
