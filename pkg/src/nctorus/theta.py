"""The deformation parameter theta and phases measured in turns.

A phase of ``x`` turns stands for the scalar e^{2 pi i x}. The Weyl relation
contributes e^{i pi theta k} for an integer k, i.e. ``theta * k/2`` turns.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Optional

import mpmath

from .quadratic import QuadraticNumber
from .scalars import Cyclotomic, DEFAULT_PREC, SymbolicPhaseError


class PrecisionExhausted(ArithmeticError):
    """The source of a real number cannot supply the requested number of bits."""

    def __init__(self, needed: int, available: int):
        super().__init__(f"precision exhausted: need {needed} bits, source has {available}")
        self.needed = needed
        self.available = available


# ---------------------------------------------------------------------------
# phases


@dataclass(frozen=True)
class ExactTurns:
    turns: Fraction

    def __post_init__(self):
        object.__setattr__(self, "turns", Fraction(self.turns) % 1)

    def __mul__(self, other):
        if isinstance(other, ExactTurns):
            return ExactTurns(self.turns + other.turns)
        if isinstance(other, ApproxTurns):
            return other * self
        if isinstance(other, SymbolicTurns):
            return other * self
        return NotImplemented

    def conjugate(self) -> "ExactTurns":
        return ExactTurns(-self.turns)

    def to_scalar(self) -> Cyclotomic:
        return Cyclotomic.root(self.turns)


@dataclass(frozen=True)
class ApproxTurns:
    turns: mpmath.mpf
    prec: int = DEFAULT_PREC

    def __post_init__(self):
        with mpmath.workprec(self.prec + 20):
            x = mpmath.mpf(self.turns)
            x = x - mpmath.floor(x)
        object.__setattr__(self, "turns", x)

    def _as_mpf(self, other) -> mpmath.mpf:
        if isinstance(other, ExactTurns):
            return mpmath.mpf(other.turns.numerator) / other.turns.denominator
        return other.turns

    def __mul__(self, other):
        if isinstance(other, (ExactTurns, ApproxTurns)):
            prec = min(self.prec, getattr(other, "prec", self.prec))
            with mpmath.workprec(prec + 20):
                return ApproxTurns(self.turns + self._as_mpf(other), prec)
        if isinstance(other, SymbolicTurns):
            raise SymbolicPhaseError("cannot combine a numeric phase with a symbolic theta")
        return NotImplemented

    def conjugate(self) -> "ApproxTurns":
        return ApproxTurns(-self.turns, self.prec)

    def to_scalar(self) -> mpmath.mpc:
        with mpmath.workprec(self.prec + 20):
            return mpmath.expjpi(2 * self.turns)


@dataclass(frozen=True)
class SymbolicTurns:
    """``multiple * theta + offset`` turns with theta left symbolic."""

    multiple: Fraction
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "multiple", Fraction(self.multiple))
        object.__setattr__(self, "offset", Fraction(self.offset) % 1)

    def __mul__(self, other):
        if isinstance(other, SymbolicTurns):
            return SymbolicTurns(self.multiple + other.multiple, self.offset + other.offset)
        if isinstance(other, ExactTurns):
            return SymbolicTurns(self.multiple, self.offset + other.turns)
        if isinstance(other, ApproxTurns):
            raise SymbolicPhaseError("cannot combine a numeric phase with a symbolic theta")
        return NotImplemented

    def conjugate(self) -> "SymbolicTurns":
        return SymbolicTurns(-self.multiple, -self.offset)

    def to_scalar(self) -> Cyclotomic:
        if self.multiple != 0:
            raise SymbolicPhaseError("symbolic phase not scalar")
        return Cyclotomic.root(self.offset)


Phase = ExactTurns | ApproxTurns | SymbolicTurns


# ---------------------------------------------------------------------------
# theta variants


class ThetaParameter:
    """Base class; concrete variants below."""

    kind: str = "abstract"

    @property
    def is_numeric(self) -> bool:
        return True

    def phase_turns(self, multiple) -> Phase:
        """The phase ``multiple * theta`` turns."""
        raise NotImplementedError

    def weyl_phase(self, sigma: int) -> Phase:
        """e^{i pi theta sigma} as a phase."""
        return self.phase_turns(Fraction(sigma, 2))

    def fixed_point(self, bits: int) -> int:
        """floor(theta * 2**bits)."""
        raise NotImplementedError

    def approx(self, bits: int = DEFAULT_PREC) -> Fraction:
        """A dyadic rational within 2**-bits of theta (from below)."""
        return Fraction(self.fixed_point(bits), 1 << bits)

    def to_mpf(self, prec: int = DEFAULT_PREC) -> mpmath.mpf:
        with mpmath.workprec(prec + 20):
            return mpmath.mpf(self.fixed_point(prec + 8)) / mpmath.mpf(2) ** (prec + 8)

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(ThetaParameter):
    kind = "zero"

    def phase_turns(self, multiple) -> ExactTurns:
        return ExactTurns(Fraction(0))

    def fixed_point(self, bits: int) -> int:
        return 0

    def to_json(self) -> dict:
        return {"kind": "zero"}


def _in_unit_interval(x):
    """Weyl phases e^{i pi theta k} with k odd change sign under theta -> theta + 1,
    so a theta outside [0, 1) is rejected rather than silently reduced."""
    if not 0 <= x < 1:
        raise ValueError(f"theta must lie in [0, 1), got {x}")
    return x


@dataclass(frozen=True)
class Rational(ThetaParameter):
    value: Fraction
    kind = "rational"

    def __post_init__(self):
        object.__setattr__(self, "value", _in_unit_interval(Fraction(self.value)))

    def phase_turns(self, multiple) -> ExactTurns:
        return ExactTurns(Fraction(multiple) * self.value)

    def fixed_point(self, bits: int) -> int:
        return (self.value.numerator << bits) // self.value.denominator

    def to_json(self) -> dict:
        return {"kind": "rational", "value": str(self.value)}


@dataclass(frozen=True)
class SpecialQuadratic(ThetaParameter):
    """theta = lambda*l + (lambda - 1)*beta_r mod 1 for a fixed hyperbolic matrix."""

    ell: int
    r: int
    value: QuadraticNumber
    beta_r: Fraction
    matrix: Optional[tuple] = None
    prec: int = DEFAULT_PREC
    kind = "special"

    def phase_turns(self, multiple) -> ApproxTurns:
        x = (self.value * Fraction(multiple)).frac(self.prec + 16)
        with mpmath.workprec(self.prec + 20):
            return ApproxTurns(mpmath.mpf(x.numerator) / x.denominator, self.prec)

    def fixed_point(self, bits: int) -> int:
        return self.value.fixed_point(bits)

    def to_json(self) -> dict:
        out = {"kind": "special", "ell": self.ell, "r": self.r}
        if self.matrix is not None:
            out["matrix"] = [list(row) for row in self.matrix]
        return out


@dataclass(frozen=True)
class GenericIrrational(ThetaParameter):
    """A symbolic theta from the full-measure set on which all nonconstant orbit averages vanish."""

    kind = "generic"

    @property
    def is_numeric(self) -> bool:
        return False

    def phase_turns(self, multiple) -> SymbolicTurns:
        return SymbolicTurns(Fraction(multiple))

    def fixed_point(self, bits: int) -> int:
        raise SymbolicPhaseError("generic theta has no numeric value")

    def to_json(self) -> dict:
        return {"kind": "generic"}


@dataclass(frozen=True)
class ExplicitReal(ThetaParameter):
    """A concrete real theta in [0, 1) from one of four bit sources.

    * ``exact``: an exact rational (e.g. a decimal literal),
    * ``sqrt``: the square root of a non-negative rational,
    * ``random``: an infinite, prefix-consistent stream of random bits from a seed,
    * ``mpf``: a finite-precision mpmath real (bits beyond its precision are unavailable).
    """

    source: str
    data: object
    available_bits: Optional[int] = None
    prec: int = DEFAULT_PREC
    kind = "real"
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @classmethod
    def exact(cls, x, prec: int = DEFAULT_PREC) -> "ExplicitReal":
        return cls("exact", _in_unit_interval(Fraction(x)), prec=prec)

    @classmethod
    def sqrt(cls, x, prec: int = DEFAULT_PREC) -> "ExplicitReal":
        x = Fraction(x)
        if not 0 <= x < 1:
            raise ValueError(f"sqrt source must lie in [0, 1) so that theta does, got {x}")
        return cls("sqrt", x, prec=prec)

    @classmethod
    def random(cls, seed: int, prec: int = DEFAULT_PREC) -> "ExplicitReal":
        return cls("random", int(seed), prec=prec)

    @classmethod
    def from_mpf(cls, x: mpmath.mpf) -> "ExplicitReal":
        bits = mpmath.mp.prec
        _in_unit_interval(mpmath.mpf(x))
        return cls("mpf", mpmath.mpf(x), available_bits=bits, prec=min(bits, DEFAULT_PREC))

    def _random_bits(self, bits: int) -> int:
        chunks = -(-bits // 64)
        stream = self._cache.get("chunks")
        if stream is None or len(stream) < chunks:
            rng = random.Random(self.data)
            stream = [rng.getrandbits(64) for _ in range(max(chunks, 4))]
            self._cache["chunks"] = stream
        acc = 0
        for c in stream[:chunks]:
            acc = (acc << 64) | c
        return acc >> (64 * chunks - bits)

    def fixed_point(self, bits: int) -> int:
        if self.source == "exact":
            return (self.data.numerator << bits) // self.data.denominator
        if self.source == "sqrt":
            x = self.data
            # floor(sqrt(floor(y))) == floor(sqrt(y)) for y >= 0
            return isqrt((x.numerator << (2 * bits)) // x.denominator)
        if self.source == "random":
            return self._random_bits(bits)
        if self.source == "mpf":
            if bits > self.available_bits:
                raise PrecisionExhausted(bits, self.available_bits)
            with mpmath.workprec(self.available_bits + bits + 20):
                return int(mpmath.floor(self.data * mpmath.mpf(2) ** bits))
        raise ValueError(f"unknown source {self.source!r}")

    def phase_turns(self, multiple) -> Phase:
        multiple = Fraction(multiple)
        if self.source == "exact":
            return ExactTurns(multiple * self.data)
        if multiple == 0:
            return ExactTurns(Fraction(0))
        extra = abs(multiple.numerator).bit_length() + 8
        theta_b = self.fixed_point(self.prec + extra)
        x = (multiple * theta_b / (1 << (self.prec + extra))) % 1
        with mpmath.workprec(self.prec + 20):
            return ApproxTurns(mpmath.mpf(x.numerator) / x.denominator, self.prec)

    def to_json(self) -> dict:
        if self.source == "mpf":
            return {"kind": "real", "source": "mpf", "value": mpmath.nstr(self.data, 50)}
        return {"kind": "real", "source": self.source, "value": str(self.data)}
