import cmath
import math
from fractions import Fraction

import pytest

from nctorus import lattice as L
from nctorus.clustering_suite import (
    condition_3_12_average,
    condition_3_8_witness,
    equidistribution_sums,
    equidistribution_test,
    orbit_phases,
    product_expectation,
    random_thetas,
    strong_clustering_scan,
    support_escape_time,
    weak_clustering_scan,
)
from nctorus.scalars import Cyclotomic, ThetaSeries, to_mpc
from nctorus.spectral_number_theory import CAT_MAP, T4, asymptotic_form, special_theta, trace_family
from nctorus.theta import ExplicitReal, GenericIrrational, Rational, Zero
from nctorus.weyl_algebra import WeylObservable


def W(v, c=1):
    return WeylObservable.monomial(v, c)


def test_weak_clustering_generic_is_exactly_zero_after_escape():
    X, Y, Z = W((1, 0)), W((0, 1)) + W((0, -1)), W((-1, 0))
    scan = weak_clustering_scan(X, Y, Z, CAT_MAP, GenericIrrational(), range(1, 20))
    assert scan.converged
    assert all(isinstance(v, ThetaSeries) and v.is_zero() for v in scan.values[2:])


def test_weak_clustering_rational_theta():
    X, Y, Z = W((1, 0)), W((1, 1)) + W((-1, -1)), W((-1, 0))
    scan = weak_clustering_scan(X, Y, Z, T4, Rational(Fraction(1, 3)), range(1, 30))
    assert scan.verdict == "converged"


def test_strong_clustering_dichotomy():
    good = strong_clustering_scan((1, 0), (0, 1), CAT_MAP, special_theta(CAT_MAP, 1, 0), range(1, 41))
    assert good.converged
    assert max(good.magnitudes()[19:]) < 1e-6
    bad = strong_clustering_scan((1, 0), (0, 1), CAT_MAP, Rational(Fraction(1, 3)), range(1, 201))
    assert not bad.converged
    rec = bad.recurrent_values()
    assert any(v > 0.5 for v in rec)


def test_support_escape_time():
    inner = [(1, 0), (0, 1), (2, -1)]
    n = (1, 1)
    t0 = support_escape_time(CAT_MAP, inner, n)
    diffs = {L.add(a, L.neg(b)) for a in inner for b in inner} | set(inner)
    for t in range(t0, t0 + 30):
        assert CAT_MAP.apply(n, t) not in diffs
    with pytest.raises(ValueError):
        support_escape_time(CAT_MAP, inner, (0, 0))


def test_condition_3_8_witness():
    letters = [(W((1, 0)) + W((-1, 0)), 1), (W((0, 1)), 2), (W((-1, 0)), 1), (W((0, -1)), 2)]
    w = condition_3_8_witness(letters, W((1, 1)) + W((2, 0)), 2, CAT_MAP, samples=50)
    assert w.holds and w.checked_configurations > 0
    with pytest.raises(ValueError, match="precondition"):
        condition_3_8_witness(letters, W((0, 0)), 1, CAT_MAP)


def test_condition_3_12_generic_and_mismatch():
    assert condition_3_12_average((1, 0), (0, 1), (1, 0), CAT_MAP, GenericIrrational()) == 0
    assert condition_3_12_average((2, 0), (0, 1), (1, 0), CAT_MAP, special_theta(CAT_MAP, 1, 0)) == 0
    assert condition_3_12_average((1, 0), (0, 1), (1, 0), CAT_MAP, Zero()) == 1


@pytest.mark.parametrize("m,n", [((1, 0), (0, 1)), ((1, 1), (2, -1)), ((2, 1), (1, 0))])
def test_condition_3_12_special_matches_truncated_average(m, n):
    T = trace_family(5)
    for r in range(3):
        th = special_theta(T, 0, r)
        exact = condition_3_12_average(n, m, n, T, th)
        assert exact == Cyclotomic.root(th.beta_r * asymptotic_form(T, n, m))
        num = equidistribution_sums(n, m, T, th, 3000)[0]
        # the orbit phase converges geometrically, so the Cesaro mean is within O(1/N)
        assert abs(complex(to_mpc(exact, 64)) - num) < 1e-2


def test_condition_3_12_rational_is_exact_period_mean():
    th = Rational(Fraction(1, 4))
    m, n = (1, 0), (0, 1)
    exact = condition_3_12_average(n, m, n, CAT_MAP, th)
    num = equidistribution_sums(n, m, CAT_MAP, th, 6000)[0]
    assert abs(complex(to_mpc(exact, 64)) - num) < 1e-3


def test_orbit_phases_match_exact_rational_computation():
    th = Rational(Fraction(2, 7))
    ph = orbit_phases((1, 0), (1, 2), T4, th, 30)
    for t in range(1, 31):
        s = L.symplectic((1, 0), T4.apply((1, 2), t))
        assert ph[t - 1] == float((Fraction(2, 7) * s) % 1)


def test_orbit_phases_fixed_point_against_mpmath():
    import mpmath

    th = ExplicitReal.sqrt(Fraction(137, 1000))
    ph = orbit_phases((1, 0), (0, 1), CAT_MAP, th, 60)
    with mpmath.workprec(400):
        x = th.to_mpf(400)
        for t in (1, 10, 30, 60):
            s = L.symplectic((1, 0), CAT_MAP.apply((0, 1), t))
            assert abs(float(mpmath.frac(x * s)) - ph[t - 1]) < 1e-12


def test_condition_3_12_truncated_branch_agrees_with_exact_branch():
    # a rational theta forced through the truncated mean must reproduce the exact period mean
    th = Rational(Fraction(1, 4))
    m, n = (1, 0), (0, 1)
    exact = complex(to_mpc(condition_3_12_average(n, m, n, CAT_MAP, th), 64))
    real = ExplicitReal.exact(Fraction(1, 4))
    assert abs(complex(condition_3_12_average(n, m, n, CAT_MAP, real, t_max=6000)) - exact) < 1e-3


def test_equidistribution_trivial_cases():
    assert equidistribution_sums((1, 0), (0, 1), CAT_MAP, Zero(), 100) == [1 + 0j]
    assert equidistribution_sums((1, 0), (1, 0), CAT_MAP, ExplicitReal.random(1), 10)[0] != 1


def test_equidistribution_mean_square_small_scale():
    rep = equidistribution_test((1, 0), (0, 1), CAT_MAP, random_thetas(40, 7), 2000, harmonics=2)
    assert rep.mean_square(1) <= 3 / 2000
    assert rep.mean_square(2) <= 3 / 2000
    lines = rep.to_csv().splitlines()
    assert lines[0] == "# nc-torus-lab v1"
    assert len(lines) == 2 + 40 * 2


def test_random_thetas_reproducible():
    a = [t.to_json() for t in random_thetas(5, 3)]
    b = [t.to_json() for t in random_thetas(5, 3)]
    assert a == b


def test_product_expectation():
    th = Rational(Fraction(1, 3))
    val = product_expectation([W((1, 0)), W((0, 1)), W((-1, -1))], th)
    assert val == Cyclotomic.root(Fraction(1, 6))
    sym = product_expectation([W((1, 0)), W((0, 1)), W((-1, -1))], GenericIrrational())
    assert sym == ThetaSeries.phase(Fraction(1, 2))


def test_scan_csv():
    scan = strong_clustering_scan((1, 0), (0, 1), CAT_MAP, Rational(Fraction(1, 3)), range(1, 5))
    lines = scan.to_csv().splitlines()
    assert lines[0] == "# nc-torus-lab v1"
    assert lines[1] == "t,value_re,value_im,abs_value"
    assert len(lines) == 6
    assert scan.to_json()["verdict"] == "not-converged"
