"""Weyl monomials and finitely supported observables on the noncommutative torus.

W(m) W(n) = e^{i pi theta sigma(m,n)} W(m+n),  W(m)* = W(-m),  phi(W(m)) = [m == 0],
and the automorphism induced by T sends W(m) to W(T m).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Tuple

import mpmath

from . import lattice as L
from .lattice import IntVec2, symplectic
from .scalars import (
    ONE,
    ZERO,
    Cyclotomic,
    Scalar,
    SymbolicPhaseError,
    ThetaSeries,
    complex_scalar,
    s_is_zero,
    sadd,
    sconj,
    smul,
    to_mpc,
    to_scalar,
)
from .spectral_number_theory import HyperbolicMatrix, matrix_power
from .theta import ApproxTurns, ExactTurns, Phase, SymbolicTurns, ThetaParameter

__all__ = [
    "WeylMonomial",
    "WeylObservable",
    "symplectic",
    "mul_monomials",
    "adjoint",
    "evolve",
    "trace_state",
    "mul_observables",
    "commutator_defect",
]

_NO_PHASE = ExactTurns(Fraction(0))


@dataclass(frozen=True)
class WeylMonomial:
    """coeff * e^{2 pi i phase} * W(vector)."""

    vector: IntVec2
    coeff: Scalar = ONE
    phase: Phase = _NO_PHASE

    def __post_init__(self):
        object.__setattr__(self, "vector", L.vec(self.vector))
        if not isinstance(self.coeff, (Cyclotomic, mpmath.mpc)):
            object.__setattr__(self, "coeff", to_scalar(self.coeff))

    def series(self) -> ThetaSeries:
        """The full coefficient as a series in theta (constant unless the phase is symbolic)."""
        if isinstance(self.phase, SymbolicTurns):
            return ThetaSeries.phase(self.phase.multiple, smul(self.coeff, Cyclotomic.root(self.phase.offset)))
        return ThetaSeries.constant(self.scalar())

    def scalar(self) -> Scalar:
        """The full coefficient coeff * e^{2 pi i phase}."""
        return smul(self.coeff, self.phase.to_scalar())

    def is_identity_multiple(self) -> bool:
        return self.vector == L.ZERO

    def __eq__(self, other):
        if not isinstance(other, WeylMonomial):
            return NotImplemented
        if self.vector != other.vector:
            return False
        a, b = self.series(), other.series()
        if all(isinstance(c, Cyclotomic) for c in list(a.terms.values()) + list(b.terms.values())):
            return a == b
        if not (a.is_scalar() and b.is_scalar()):
            return False
        return mpmath.almosteq(to_mpc(a.scalar()), to_mpc(b.scalar()), 2.0 ** -100)

    __hash__ = None

    def to_json(self) -> dict:
        re, im = scalar_to_json(self.scalar())
        return {"vector": list(self.vector), "re": re, "im": im}


def scalar_parts(x: Scalar):
    """Real and imaginary parts, as Fractions when they are rational, else mpf."""
    if isinstance(x, Cyclotomic):
        re = (x + x.conjugate()) * Fraction(1, 2)
        im = (x - x.conjugate()) * Cyclotomic.gaussian(0, Fraction(-1, 2))
        out = []
        for part in (re, im):
            out.append(part.as_fraction() if part.is_rational() else to_mpc(part).real)
        return tuple(out)
    z = mpmath.mpc(x)
    return z.real, z.imag


def scalar_to_json(x: Scalar) -> Tuple[str, str]:
    def fmt(v):
        if isinstance(v, Fraction):
            return str(v)
        return mpmath.nstr(v, 40, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)

    re, im = scalar_parts(x)
    return fmt(re), fmt(im)


class WeylObservable:
    """A finite linear combination sum_n f(n) W(n); zero coefficients are dropped."""

    __slots__ = ("support",)

    def __init__(self, support: Mapping[IntVec2, object] | None = None):
        clean: Dict[IntVec2, Scalar] = {}
        for v, c in (support or {}).items():
            v = L.vec(v)
            c = c if isinstance(c, (Cyclotomic, mpmath.mpc)) else to_scalar(c)
            clean[v] = sadd(clean[v], c) if v in clean else c
        self.support = {v: c for v, c in sorted(clean.items()) if not s_is_zero(c)}

    @classmethod
    def monomial(cls, vector, coeff=1) -> "WeylObservable":
        return cls({L.vec(vector): coeff})

    @classmethod
    def identity(cls) -> "WeylObservable":
        return cls({L.ZERO: 1})

    @classmethod
    def symmetric(cls, n) -> "WeylObservable":
        """W(n) + W(-n), the basic self-adjoint centred observable."""
        n = L.vec(n)
        return cls({n: 1, L.neg(n): 1})

    @classmethod
    def from_monomials(cls, monos: Iterable[WeylMonomial]) -> "WeylObservable":
        acc: Dict[IntVec2, Scalar] = {}
        for w in monos:
            c = w.scalar()
            acc[w.vector] = sadd(acc[w.vector], c) if w.vector in acc else c
        return cls(acc)

    def monomials(self) -> Tuple[WeylMonomial, ...]:
        return tuple(WeylMonomial(v, c) for v, c in self.support.items())

    def coefficient(self, v: IntVec2) -> Scalar:
        return self.support.get(L.vec(v), ZERO)

    def is_zero(self) -> bool:
        return not self.support

    def is_centred(self) -> bool:
        return L.ZERO not in self.support

    def is_self_adjoint(self) -> bool:
        return self == adjoint(self)

    def radius(self) -> int:
        """max |n|_inf over the support."""
        return max((max(abs(v[0]), abs(v[1])) for v in self.support), default=0)

    def __add__(self, other: "WeylObservable") -> "WeylObservable":
        merged = dict(self.support)
        for v, c in other.support.items():
            merged[v] = sadd(merged[v], c) if v in merged else c
        return WeylObservable(merged)

    def scaled(self, c) -> "WeylObservable":
        c = c if isinstance(c, (Cyclotomic, mpmath.mpc)) else to_scalar(c)
        return WeylObservable({v: smul(x, c) for v, x in self.support.items()})

    def __eq__(self, other):
        if not isinstance(other, WeylObservable):
            return NotImplemented
        if self.support.keys() != other.support.keys():
            return False
        for v, c in self.support.items():
            d = other.support[v]
            if isinstance(c, Cyclotomic) and isinstance(d, Cyclotomic):
                if c != d:
                    return False
            elif not mpmath.almosteq(to_mpc(c), to_mpc(d), 2.0 ** -100):
                return False
        return True

    __hash__ = None

    def __repr__(self):
        return f"WeylObservable({self.support!r})"

    def to_json(self) -> list:
        out = []
        for v, c in self.support.items():
            re, im = scalar_to_json(c)
            out.append({"vector": list(v), "re": re, "im": im})
        return out

    @classmethod
    def from_json(cls, terms: list) -> "WeylObservable":
        acc = []
        for term in terms:
            c = complex_scalar(term.get("re", 0), term.get("im", 0))
            acc.append((L.vec(term["vector"]), c))
        out: Dict[IntVec2, Scalar] = {}
        for v, c in acc:
            out[v] = sadd(out[v], c) if v in out else c
        return cls(out)


def mul_monomials(a: WeylMonomial, b: WeylMonomial, theta: ThetaParameter) -> WeylMonomial:
    phase = a.phase * b.phase * theta.weyl_phase(symplectic(a.vector, b.vector))
    return WeylMonomial(L.add(a.vector, b.vector), smul(a.coeff, b.coeff), phase)


def product_phase_multiple(vectors: Iterable[IntVec2]) -> Fraction:
    """W(x1)...W(xn) = e^{2 pi i theta k} W(sum x) with k = sum_{i<j} sigma(xi, xj)/2."""
    total = 0
    acc = L.ZERO
    for x in vectors:
        total += symplectic(acc, x)
        acc = L.add(acc, x)
    return Fraction(total, 2)


def adjoint(x):
    if isinstance(x, WeylMonomial):
        return WeylMonomial(L.neg(x.vector), sconj(x.coeff), x.phase.conjugate())
    if isinstance(x, WeylObservable):
        return WeylObservable({L.neg(v): sconj(c) for v, c in x.support.items()})
    raise TypeError(f"cannot take the adjoint of {type(x).__name__}")


def evolve(x, T: HyperbolicMatrix, t: int):
    M = matrix_power(T, t)
    if isinstance(x, WeylMonomial):
        return WeylMonomial(L.matvec(M, x.vector), x.coeff, x.phase)
    if isinstance(x, WeylObservable):
        return WeylObservable({L.matvec(M, v): c for v, c in x.support.items()})
    raise TypeError(f"cannot evolve {type(x).__name__}")


def trace_state(x) -> Scalar:
    if isinstance(x, WeylMonomial):
        return x.scalar() if x.vector == L.ZERO else ZERO
    return x.coefficient(L.ZERO)


def mul_observables(x: WeylObservable, y: WeylObservable, theta: ThetaParameter) -> WeylObservable:
    acc: Dict[IntVec2, Scalar] = {}
    for m, a in x.support.items():
        for n, b in y.support.items():
            ph = theta.weyl_phase(symplectic(m, n))
            try:
                c = smul(smul(a, b), ph.to_scalar())
            except SymbolicPhaseError:
                raise SymbolicPhaseError("symbolic phase not scalar") from None
            v = L.add(m, n)
            acc[v] = sadd(acc[v], c) if v in acc else c
    return WeylObservable(acc)


def power(x: WeylObservable, k: int, theta: ThetaParameter) -> WeylObservable:
    out = WeylObservable.identity()
    for _ in range(k):
        out = mul_observables(out, x, theta)
    return out


def commutator_defect(m: IntVec2, n: IntVec2, t: int, T: HyperbolicMatrix, theta: ThetaParameter, prec: int = 128) -> mpmath.mpf:
    """phi([W(m), W(T^t n)]* [W(m), W(T^t n)]) = 4 sin^2(pi theta sigma(m, T^t n))."""
    s = symplectic(m, L.matvec(matrix_power(T, t), n))
    ph = theta.phase_turns(s)
    if isinstance(ph, SymbolicTurns):
        raise SymbolicPhaseError("commutator defect needs a numeric theta")
    with mpmath.workprec(prec + 20):
        x = mpmath.mpf(ph.turns.numerator) / ph.turns.denominator if isinstance(ph, ExactTurns) else ph.turns
        return 4 * mpmath.sin(mpmath.pi * x) ** 2
