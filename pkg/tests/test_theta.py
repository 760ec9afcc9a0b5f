from fractions import Fraction
from math import isqrt

import mpmath
import pytest

from nctorus.theta import (
    ApproxTurns,
    ExactTurns,
    ExplicitReal,
    GenericIrrational,
    PrecisionExhausted,
    Rational,
    SymbolicTurns,
    Zero,
)


def test_exact_turns_reduced():
    assert ExactTurns(Fraction(7, 6)).turns == Fraction(1, 6)
    assert ExactTurns(Fraction(-1, 6)).turns == Fraction(5, 6)
    assert (ExactTurns(Fraction(1, 2)) * ExactTurns(Fraction(2, 3))).turns == Fraction(1, 6)


def test_approx_contaminates():
    p = ExactTurns(Fraction(1, 4)) * ApproxTurns(mpmath.mpf("0.5"))
    assert isinstance(p, ApproxTurns)
    assert p.turns == mpmath.mpf("0.75")


def test_symbolic_turns():
    s = SymbolicTurns(Fraction(1, 2)) * ExactTurns(Fraction(1, 3))
    assert s.multiple == Fraction(1, 2) and s.offset == Fraction(1, 3)
    assert (s * s.conjugate()).to_scalar() == 1


def test_rational_weyl_phase():
    th = Rational(Fraction(1, 3))
    assert th.weyl_phase(1) == ExactTurns(Fraction(1, 6))
    assert th.fixed_point(10) == 1024 // 3
    assert Zero().weyl_phase(5) == ExactTurns(0)
    assert isinstance(GenericIrrational().weyl_phase(3), SymbolicTurns)


def test_sqrt_source_fixed_point():
    th = ExplicitReal.sqrt(Fraction(137, 1000))
    for bits in (10, 64, 500):
        fp = th.fixed_point(bits)
        assert fp == isqrt((137 << (2 * bits)) // 1000)
    assert abs(float(th.to_mpf()) - 0.370135110466435) < 1e-12


def test_random_source_is_prefix_consistent():
    th = ExplicitReal.random(7)
    a = th.fixed_point(64)
    b = th.fixed_point(1000)
    assert b >> (1000 - 64) == a
    assert ExplicitReal.random(7).fixed_point(300) == th.fixed_point(300)


def test_precision_exhausted():
    with mpmath.workprec(100):
        th = ExplicitReal.from_mpf(mpmath.mpf(1) / 3)
    th.fixed_point(80)
    with pytest.raises(PrecisionExhausted, match="precision exhausted"):
        th.fixed_point(200)


@pytest.mark.parametrize("make", [
    lambda: Rational(Fraction(39, 29)),
    lambda: Rational(Fraction(-1, 3)),
    lambda: ExplicitReal.exact(Fraction(3, 2)),
    lambda: ExplicitReal.sqrt(Fraction(2)),
    lambda: ExplicitReal.from_mpf(mpmath.mpf(-0.25)),
])
def test_theta_outside_unit_interval_is_rejected(make):
    with pytest.raises(ValueError, match=r"\[0, 1\)"):
        make()
