"""Nonnegative scalars stored as base-2 logarithms.

Indicator values in long adaptive runs decay like ``2**(-c*k)`` and leave the
range of IEEE doubles after a few thousand steps.  :class:`LogScalar` keeps the
exponent instead of the value, so sums and ratios stay meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable

_LN2 = math.log(2.0)

# relative size below which a negative difference is treated as round-off
NEGATIVE_RTOL = 1e-12


@total_ordering
@dataclass(frozen=True)
class LogScalar:
    """A value ``x >= 0`` represented by ``log2(x)``; zero is ``-inf``."""

    log2: float

    def __post_init__(self):
        if math.isnan(self.log2) or self.log2 == math.inf:
            raise ValueError(f"invalid log2 value {self.log2!r}")

    @classmethod
    def from_value(cls, x: float) -> "LogScalar":
        if x < 0:
            raise ValueError(f"LogScalar cannot hold negative value {x!r}")
        return cls(math.log2(x)) if x > 0 else ZERO

    @classmethod
    def pow2(cls, exponent: float) -> "LogScalar":
        return cls(float(exponent))

    @property
    def is_zero(self) -> bool:
        return self.log2 == -math.inf

    @property
    def value(self) -> float:
        """Linear value; underflows to 0.0 for very small scalars."""
        if self.is_zero:
            return 0.0
        return 2.0 ** self.log2 if self.log2 < 1024 else math.inf

    def __bool__(self):
        return not self.is_zero

    def __lt__(self, other):
        if not isinstance(other, LogScalar):
            return NotImplemented
        return self.log2 < other.log2

    def __add__(self, other: "LogScalar") -> "LogScalar":
        if not isinstance(other, LogScalar):
            return NotImplemented
        hi, lo = (self, other) if self.log2 >= other.log2 else (other, self)
        if lo.is_zero:
            return hi
        return LogScalar(hi.log2 + math.log1p(2.0 ** (lo.log2 - hi.log2)) / _LN2)

    def __sub__(self, other: "LogScalar") -> "LogScalar":
        """Difference ``self - other``; requires ``self >= other`` up to round-off."""
        if not isinstance(other, LogScalar):
            return NotImplemented
        if other.is_zero:
            return self
        d = other.log2 - self.log2
        if d >= 0:
            if self.is_zero or d > NEGATIVE_RTOL:
                raise ValueError("LogScalar subtraction would be negative")
            return ZERO
        # log2(1 - 2**d) without forming 1 - 2**d
        return LogScalar(self.log2 + math.log(-math.expm1(d * _LN2)) / _LN2)

    def __mul__(self, other) -> "LogScalar":
        if isinstance(other, LogScalar):
            return LogScalar(self.log2 + other.log2) if self and other else ZERO
        if isinstance(other, (int, float)):
            return self * LogScalar.from_value(other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogScalar":
        if isinstance(other, (int, float)):
            other = LogScalar.from_value(other)
        if not isinstance(other, LogScalar):
            return NotImplemented
        if other.is_zero:
            raise ZeroDivisionError("LogScalar division by zero")
        return LogScalar(self.log2 - other.log2) if self else ZERO

    def times_pow2(self, exponent: float) -> "LogScalar":
        """Exact scaling by ``2**exponent``."""
        return LogScalar(self.log2 + exponent) if self else ZERO

    def ratio(self, other: "LogScalar") -> float:
        """``self / other`` as a float (may over- or underflow)."""
        q = self / other
        return q.value

    @staticmethod
    def sum(values: Iterable["LogScalar"]) -> "LogScalar":
        return log2_sum(v.log2 for v in values)

    def to_json(self) -> dict:
        return {"zero": True} if self.is_zero else {"log2": self.log2}

    @classmethod
    def from_json(cls, obj: dict) -> "LogScalar":
        if obj.get("zero"):
            return ZERO
        return cls(float(obj["log2"]))

    def __repr__(self):
        return "LogScalar(ZERO)" if self.is_zero else f"LogScalar(log2={self.log2!r})"


ZERO = LogScalar(-math.inf)
ONE = LogScalar(0.0)


def log2_sum(exponents: Iterable[float]) -> LogScalar:
    """Sum of ``2**e`` over ``exponents``, factoring out the largest term."""
    xs = [e for e in exponents if e != -math.inf]
    if not xs:
        return ZERO
    top = max(xs)
    return LogScalar(top + math.log2(math.fsum(2.0 ** (e - top) for e in xs)))


def absdiff(a: LogScalar, b: LogScalar) -> LogScalar:
    """``|a - b|``."""
    return a - b if a >= b else b - a


def log2_count(n: int) -> float:
    """``log2`` of a (possibly huge) positive integer."""
    return math.log2(n)
