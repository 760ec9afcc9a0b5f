"""Exact arithmetic in the real quadratic field Q(sqrt(D))."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from numbers import Rational

import mpmath


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)) and not isinstance(x, bool):
        return Fraction(x)
    raise TypeError(f"expected a rational, got {type(x).__name__}")


def _floor_b_sqrt(b: int, D: int) -> int:
    """floor(b * sqrt(D)) for a non-square D > 0."""
    if b == 0:
        return 0
    r = isqrt(b * b * D)
    return r if b > 0 else -r - 1


@dataclass(frozen=True)
class QuadraticNumber:
    """p + q*sqrt(D) with rational p, q; D > 0 must not be a perfect square."""

    p: Fraction
    q: Fraction
    D: int

    def __post_init__(self):
        object.__setattr__(self, "p", _as_fraction(self.p))
        object.__setattr__(self, "q", _as_fraction(self.q))
        r = isqrt(self.D) if self.D >= 0 else -1
        if self.D <= 0 or r * r == self.D:
            raise ValueError(f"D={self.D} must be a positive non-square")

    # construction helpers

    @classmethod
    def rational(cls, x, D: int) -> "QuadraticNumber":
        return cls(_as_fraction(x), Fraction(0), D)

    @classmethod
    def sqrt_d(cls, D: int) -> "QuadraticNumber":
        return cls(Fraction(0), Fraction(1), D)

    def _coerce(self, other) -> "QuadraticNumber":
        if isinstance(other, QuadraticNumber):
            if other.D != self.D:
                raise ValueError(f"mixing Q(sqrt({self.D})) with Q(sqrt({other.D}))")
            return other
        return QuadraticNumber(_as_fraction(other), Fraction(0), self.D)

    # field operations

    def __add__(self, other):
        o = self._coerce(other)
        return QuadraticNumber(self.p + o.p, self.q + o.q, self.D)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber(-self.p, -self.q, self.D)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return QuadraticNumber(
            self.p * o.p + self.q * o.q * self.D, self.p * o.q + self.q * o.p, self.D
        )

    __rmul__ = __mul__

    def conj(self) -> "QuadraticNumber":
        return QuadraticNumber(self.p, -self.q, self.D)

    def norm(self) -> Fraction:
        return self.p * self.p - self.q * self.q * self.D

    def inverse(self) -> "QuadraticNumber":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero in a quadratic field")
        c = self.conj()
        return QuadraticNumber(c.p / n, c.q / n, self.D)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "QuadraticNumber":
        if k < 0:
            return self.inverse() ** (-k)
        result = QuadraticNumber(Fraction(1), Fraction(0), self.D)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, QuadraticNumber):
            return (self.p, self.q, self.D) == (other.p, other.q, other.D)
        if isinstance(other, (int, Fraction)):
            return self.q == 0 and self.p == other
        return NotImplemented

    def __hash__(self):
        return hash((self.p, self.q, self.D))

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0

    def is_rational(self) -> bool:
        return self.q == 0

    # order and rounding (exact)

    def floor(self) -> int:
        den = self.p.denominator * self.q.denominator
        a = self.p.numerator * (den // self.p.denominator)
        b = self.q.numerator * (den // self.q.denominator)
        return (a + _floor_b_sqrt(b, self.D)) // den

    def sign(self) -> int:
        if self.is_zero():
            return 0
        # irrational unless q == 0, so floor decides the sign
        if self.q == 0:
            return 1 if self.p > 0 else -1
        return -1 if self.floor() < 0 else 1

    def __lt__(self, other):
        return (self - self._coerce(other)).sign() < 0

    def __le__(self, other):
        return (self - self._coerce(other)).sign() <= 0

    def __gt__(self, other):
        return (self - self._coerce(other)).sign() > 0

    def __ge__(self, other):
        return (self - self._coerce(other)).sign() >= 0

    def fixed_point(self, bits: int) -> int:
        """floor(self * 2**bits), exact."""
        return (self * (1 << bits)).floor() if bits >= 0 else self.floor() >> (-bits)

    def frac(self, bits: int = 128) -> Fraction:
        """Fractional part in [0, 1), truncated to ``bits`` binary digits (error < 2**-bits)."""
        whole = self.floor()
        return Fraction(self.fixed_point(bits) - (whole << bits), 1 << bits)

    def mod1(self) -> "QuadraticNumber":
        return self - self.floor()

    def to_mpf(self, prec: int = 256) -> mpmath.mpf:
        with mpmath.workprec(prec + 64):
            v = mpmath.mpf(self.p.numerator) / self.p.denominator + (
                mpmath.mpf(self.q.numerator) / self.q.denominator
            ) * mpmath.sqrt(self.D)
        return +v

    def __float__(self):
        return float(self.to_mpf(80))

    def __repr__(self):
        return f"QuadraticNumber({self.p} + {self.q}*sqrt({self.D}))"
