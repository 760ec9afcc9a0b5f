"""Exact and approximate complex scalars.

Exact scalars are elements of a cyclotomic field Q(zeta_n), stored as rational
coefficient vectors reduced modulo the n-th cyclotomic polynomial, so that
equality is decidable. Gaussian rationals live in Q(zeta_4); phases e^{2 pi i r}
with rational r are roots of unity. Anything else is an ``mpmath.mpc``.

``ThetaSeries`` is a finite sum  sum_a c_a * e^{2 pi i a theta}  with rational
theta-multiples ``a``; it keeps the deformation parameter symbolic until a
concrete value is substituted.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Dict, Iterable, Mapping, Tuple, Union

import mpmath

DEFAULT_PREC = 160


class SymbolicPhaseError(ValueError):
    """Raised when a theta-dependent phase is asked for a plain scalar value."""


# ---------------------------------------------------------------------------
# integer polynomials (coefficient lists, lowest degree first)


def _poly_divmod(num: list, den: Tuple[int, ...]) -> Tuple[list, list]:
    num = list(num)
    dd = len(den) - 1
    lead = den[-1]
    if len(num) <= dd:
        return [], num
    quot = [0] * (len(num) - dd)
    for k in range(len(num) - 1, dd - 1, -1):
        c = num[k]
        if c == 0:
            continue
        c = c / lead if lead != 1 else c
        quot[k - dd] = c
        for j in range(dd + 1):
            num[k - dd + j] -= c * den[j]
    return quot, num[:dd]


@lru_cache(maxsize=None)
def cyclotomic_poly(n: int) -> Tuple[int, ...]:
    """Coefficients of the n-th cyclotomic polynomial."""
    if n < 1:
        raise ValueError("n must be positive")
    p = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            p, rem = _poly_divmod(p, cyclotomic_poly(d))
            assert not any(rem)
    return tuple(int(c) for c in p)


def _reduce(poly: Mapping[int, Fraction], n: int) -> Tuple[Fraction, ...]:
    phi = cyclotomic_poly(n)
    deg = len(phi) - 1
    if not poly:
        return (Fraction(0),) * deg
    top = max(poly)
    dense = [Fraction(0)] * (max(top + 1, deg))
    for k, c in poly.items():
        dense[k] += c
    if len(dense) > deg:
        _, dense = _poly_divmod(dense, phi)
    return tuple(Fraction(c) for c in dense) + (Fraction(0),) * (deg - len(dense))


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


class Cyclotomic:
    """Exact element of Q(zeta_order)."""

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, poly: Mapping[int, Fraction] | None = None, *, _coeffs=None):
        self.order = order
        if _coeffs is not None:
            self.coeffs = _coeffs
        else:
            poly = {k % order: Fraction(0) for k in ()} if poly is None else poly
            folded: Dict[int, Fraction] = {}
            for k, c in poly.items():
                if c:
                    kk = k % order
                    folded[kk] = folded.get(kk, Fraction(0)) + Fraction(c)
            self.coeffs = _reduce(folded, order)

    # constructors

    @classmethod
    def rational(cls, x) -> "Cyclotomic":
        return cls(1, _coeffs=(Fraction(x),))

    @classmethod
    def root(cls, turns: Fraction) -> "Cyclotomic":
        """e^{2 pi i turns} for rational ``turns``."""
        turns = Fraction(turns) % 1
        n = turns.denominator
        return cls(n, {turns.numerator: Fraction(1)})

    @classmethod
    def gaussian(cls, re, im) -> "Cyclotomic":
        re, im = Fraction(re), Fraction(im)
        if im == 0:
            return cls.rational(re)
        return cls(4, {0: re, 1: im})

    # structure

    def _poly(self) -> Dict[int, Fraction]:
        return {k: c for k, c in enumerate(self.coeffs) if c}

    def lift(self, m: int) -> "Cyclotomic":
        if m == self.order:
            return self
        if m % self.order:
            raise ValueError(f"cannot lift order {self.order} to {m}")
        step = m // self.order
        return Cyclotomic(m, {k * step: c for k, c in self._poly().items()})

    def _common(self, other: "Cyclotomic") -> Tuple["Cyclotomic", "Cyclotomic"]:
        if self.order == other.order:
            return self, other
        m = _lcm(self.order, other.order)
        return self.lift(m), other.lift(m)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self!r} is not rational")
        return self.coeffs[0]

    # arithmetic

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            c = list(self.coeffs)
            c[0] += other
            return Cyclotomic(self.order, _coeffs=tuple(c))
        if isinstance(other, Cyclotomic):
            a, b = self._common(other)
            return Cyclotomic(a.order, _coeffs=tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Cyclotomic(self.order, _coeffs=tuple(-x for x in self.coeffs))

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, Cyclotomic)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Cyclotomic(self.order, _coeffs=tuple(x * other for x in self.coeffs))
        if isinstance(other, Cyclotomic):
            if other.order == 1:
                return self * other.coeffs[0]
            if self.order == 1:
                return other * self.coeffs[0]
            a, b = self._common(other)
            prod: Dict[int, Fraction] = {}
            for i, x in a._poly().items():
                for j, y in b._poly().items():
                    prod[i + j] = prod.get(i + j, Fraction(0)) + x * y
            return Cyclotomic(a.order, _coeffs=_reduce(prod, a.order))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (Fraction(1) / Fraction(other))
        return NotImplemented

    def conjugate(self) -> "Cyclotomic":
        if self.order <= 2:
            return self
        return Cyclotomic(self.order, {-k: c for k, c in self._poly().items()})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coeffs[0] == other
        if isinstance(other, Cyclotomic):
            a, b = self._common(other)
            return a.coeffs == b.coeffs
        return NotImplemented

    __hash__ = None

    def to_mpc(self, prec: int = DEFAULT_PREC) -> mpmath.mpc:
        with mpmath.workprec(prec + 20):
            z = mpmath.mpc(0)
            for k, c in self._poly().items():
                z += (mpmath.mpf(c.numerator) / c.denominator) * mpmath.expjpi(mpmath.mpf(2 * k) / self.order)
        return +z

    def __complex__(self):
        return complex(self.to_mpc(64))

    def __repr__(self):
        if self.is_rational():
            return f"Cyclotomic({self.coeffs[0]})"
        terms = " + ".join(f"{c}*z^{k}" for k, c in self._poly().items())
        return f"Cyclotomic[{self.order}]({terms})"


Scalar = Union[Cyclotomic, mpmath.mpc]


def to_scalar(x) -> Scalar:
    """Coerce user input to a scalar; rational inputs stay exact."""
    if isinstance(x, Cyclotomic):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, (int, Fraction)):
        return Cyclotomic.rational(x)
    if isinstance(x, str):
        return Cyclotomic.rational(Fraction(x.strip()))
    if isinstance(x, float):
        return Cyclotomic.rational(Fraction(repr(x)))
    if isinstance(x, complex):
        return Cyclotomic.gaussian(Fraction(repr(x.real)), Fraction(repr(x.imag)))
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return mpmath.mpc(x)
    raise TypeError(f"cannot interpret {x!r} as a scalar")


def complex_scalar(re, im=0) -> Scalar:
    """Scalar from separate real and imaginary parts (numbers or rational strings)."""
    def part(v):
        if isinstance(v, (mpmath.mpf,)):
            return v
        if isinstance(v, float):
            return Fraction(repr(v))
        if isinstance(v, str):
            return Fraction(v.strip())
        return Fraction(v)

    r, i = part(re), part(im)
    if isinstance(r, Fraction) and isinstance(i, Fraction):
        return Cyclotomic.gaussian(r, i)
    return mpmath.mpc(r if not isinstance(r, Fraction) else mpmath.mpf(r.numerator) / r.denominator,
                      i if not isinstance(i, Fraction) else mpmath.mpf(i.numerator) / i.denominator)


def is_exact(x) -> bool:
    return isinstance(x, Cyclotomic)


def to_mpc(x, prec: int = DEFAULT_PREC) -> mpmath.mpc:
    if isinstance(x, Cyclotomic):
        return x.to_mpc(prec)
    if isinstance(x, Fraction):
        return mpmath.mpc(mpmath.mpf(x.numerator) / x.denominator)
    return mpmath.mpc(x)


def smul(a, b) -> Scalar:
    if isinstance(a, Cyclotomic) and isinstance(b, Cyclotomic):
        return a * b
    return to_mpc(a) * to_mpc(b)


def sadd(a, b) -> Scalar:
    if isinstance(a, Cyclotomic) and isinstance(b, Cyclotomic):
        return a + b
    return to_mpc(a) + to_mpc(b)


def sconj(a) -> Scalar:
    if isinstance(a, Cyclotomic):
        return a.conjugate()
    return mpmath.conj(a)


def s_is_zero(a) -> bool:
    if isinstance(a, Cyclotomic):
        return a.is_zero()
    return a == 0


def pairwise_sum(values: Iterable, zero=None):
    """Deterministic tree reduction (independent of how terms were produced)."""
    items = list(values)
    if not items:
        return Cyclotomic.rational(0) if zero is None else zero
    while len(items) > 1:
        nxt = [sadd(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


ZERO = Cyclotomic.rational(0)
ONE = Cyclotomic.rational(1)
I_UNIT = Cyclotomic.gaussian(0, 1)


class ThetaSeries:
    """Finite sum  sum_a c_a e^{2 pi i a theta}  with rational a (turns per unit theta)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Fraction, Scalar] | None = None):
        clean: Dict[Fraction, Scalar] = {}
        for a, c in (terms or {}).items():
            a = Fraction(a)
            clean[a] = sadd(clean[a], c) if a in clean else c
        self.terms = {a: c for a, c in clean.items() if not s_is_zero(c)}

    @classmethod
    def constant(cls, c) -> "ThetaSeries":
        return cls({Fraction(0): to_scalar(c)})

    @classmethod
    def phase(cls, multiple: Fraction, coeff=ONE) -> "ThetaSeries":
        return cls({Fraction(multiple): coeff})

    def __add__(self, other: "ThetaSeries") -> "ThetaSeries":
        merged = dict(self.terms)
        for a, c in other.terms.items():
            merged[a] = sadd(merged[a], c) if a in merged else c
        return ThetaSeries(merged)

    def __mul__(self, other) -> "ThetaSeries":
        if not isinstance(other, ThetaSeries):
            s = to_scalar(other) if not isinstance(other, (Cyclotomic, mpmath.mpc)) else other
            return ThetaSeries({a: smul(c, s) for a, c in self.terms.items()})
        out: Dict[Fraction, Scalar] = {}
        for a, c in self.terms.items():
            for b, d in other.terms.items():
                v = smul(c, d)
                out[a + b] = sadd(out[a + b], v) if (a + b) in out else v
        return ThetaSeries(out)

    __rmul__ = __mul__

    def conjugate(self) -> "ThetaSeries":
        return ThetaSeries({-a: sconj(c) for a, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def is_scalar(self) -> bool:
        return all(a == 0 for a in self.terms)

    def scalar(self) -> Scalar:
        if not self.is_scalar():
            raise SymbolicPhaseError("symbolic phase not scalar")
        return self.terms.get(Fraction(0), ZERO)

    def at(self, theta) -> Scalar:
        """Substitute a concrete deformation parameter (anything with ``phase_turns``)."""
        acc = []
        for a, c in sorted(self.terms.items()):
            acc.append(smul(c, theta.phase_turns(a).to_scalar()))
        return pairwise_sum(acc)

    def __eq__(self, other):
        if isinstance(other, ThetaSeries):
            return (self + other * Cyclotomic.rational(-1)).is_zero()
        if isinstance(other, (int, Fraction, Cyclotomic)):
            return self == ThetaSeries.constant(other)
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        parts = [f"{c!r}*e(2pi i {a} theta)" if a else repr(c) for a, c in sorted(self.terms.items())]
        return "ThetaSeries(" + (" + ".join(parts) or "0") + ")"
