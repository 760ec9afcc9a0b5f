import itertools
import random
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nctorus import lattice as L
from nctorus.clustering_suite import product_expectation
from nctorus.free_product_state import (
    BudgetExceeded,
    FreeLetter,
    FreeWord,
    GenericEvaluator,
    SeparationMask,
    SpecialEvaluator,
    average_order_experiment,
    order_experiment_closed_form,
    cross_limit_turns,
    d_factors,
    direct_exponent,
    escape_separation,
    normalize,
    pair_identically_zero,
    pair_orbit_coefficients,
    permutation_invariance_test,
    phi_inf_generic,
    phi_inf_numeric,
    phi_inf_special,
    regroup,
    cancelling_word,
    seven_letter_word,
    special_series,
    word_adjoint,
)
from nctorus.scalars import Cyclotomic, ThetaSeries, to_mpc
from nctorus.spectral_number_theory import CAT_MAP, T4, HyperbolicMatrix, special_theta, trace_family
from nctorus.theta import ExplicitReal, GenericIrrational, Rational, Zero
from nctorus.weyl_algebra import WeylObservable, evolve

T5 = trace_family(5)
vec = st.tuples(st.integers(-3, 3), st.integers(-3, 3)).filter(lambda v: v != (0, 0))


@st.composite
def monomial_words(draw, max_copies=3, max_letters=6):
    k = draw(st.integers(1, max_letters))
    copies = draw(st.lists(st.integers(1, max_copies), min_size=k, max_size=k))
    vecs = draw(st.lists(vec, min_size=k, max_size=k))
    if draw(st.booleans()):
        # rebalance each copy so that the word can survive
        for c in set(copies):
            idx = [i for i, x in enumerate(copies) if x == c]
            if len(idx) > 1:
                vecs[idx[-1]] = L.neg(L.vsum(vecs[i] for i in idx[:-1]))
    letters = [(v, c) for v, c in zip(vecs, copies) if v != (0, 0)]
    return FreeWord.of(*letters) if letters else FreeWord.of(((1, 0), 1))


def close(a, b, tol=1e-9):
    return abs(complex(to_mpc(a, 64)) - complex(to_mpc(b, 64))) <= tol


def test_normalize_examples():
    X = WeylObservable.monomial((1, 0))
    Y = WeylObservable.monomial((0, 1))
    w = FreeWord((FreeLetter(X, 1), FreeLetter(WeylObservable.identity(), 2), FreeLetter(Y, 1)))
    th = Rational(Fraction(1, 3))
    n = normalize(w, th)
    assert len(n) == 1 and n.letters[0].copy == 1
    assert n.letters[0].payload == WeylObservable({(1, 1): Cyclotomic.root(Fraction(1, 6))})
    w2 = FreeWord((FreeLetter(X, 1), FreeLetter(Y, 2)))
    assert normalize(w2, th) == w2
    w3 = FreeWord.of(((2, 1), 1), ((-2, -1), 1))
    n3 = normalize(w3, th)
    assert n3.letters == () and n3.coeff == 1
    assert normalize(n, th) == n


def test_generic_examples():
    n, m = (2, 1), (1, 3)
    assert phi_inf_generic(FreeWord.of((n, 1), (L.neg(n), 1)), CAT_MAP) == 1
    assert phi_inf_generic(FreeWord.of((m, 1), (n, 2), (L.neg(m), 1)), CAT_MAP) == 0
    assert phi_inf_generic(cancelling_word(), CAT_MAP) == 1
    assert phi_inf_generic(cancelling_word((1, 1)), T4) == 1


def test_generic_group_phase_is_symbolic():
    w = FreeWord.of(((1, 0), 1), ((0, 1), 1), ((-1, -1), 1))
    val = phi_inf_generic(w, CAT_MAP)
    assert val == ThetaSeries.phase(Fraction(1, 2))
    assert val.at(Rational(Fraction(1, 3))) == Cyclotomic.root(Fraction(1, 6))


def test_special_examples():
    assert phi_inf_special(FreeWord.of(((1, 0), 1), ((0, 1), 2)), T4, 0, 1) == 0
    assert phi_inf_special(cancelling_word(), CAT_MAP, 1, 0) == 1
    n = (1, 0)
    w = FreeWord.of((n, 1), (L.neg(n), 2), (L.neg(n), 1), (n, 2))
    exact = phi_inf_special(w, T4, 0, 1)
    num = phi_inf_numeric(w, T4, special_theta(T4, 0, 1), t_max=2000)
    assert abs(complex(to_mpc(exact, 64)) - num.value) <= 1e-2


def test_special_r_out_of_range():
    with pytest.raises(ValueError, match="invalid residue index"):
        phi_inf_special(cancelling_word(), CAT_MAP, 0, 1)


def test_numeric_examples():
    w = FreeWord.of(((1, 2), 1), ((3, 1), 2), ((-1, -2), 1), ((-3, -1), 2))
    assert phi_inf_numeric(w, CAT_MAP, Zero(), t_max=200).value == 1
    res = phi_inf_numeric(cancelling_word(), CAT_MAP, ExplicitReal.sqrt(Fraction(137, 1000)), t_max=10_000)
    assert abs(res.value - 1) <= 0.05
    assert phi_inf_numeric(FreeWord.of(((1, 0), 1), ((0, 1), 2)), CAT_MAP, Rational(Fraction(1, 5)), t_max=50).value == 0


def test_numeric_budget(monkeypatch):
    w = FreeWord.of(((1, 0), 1), ((1, 0), 2), ((1, 0), 3), ((1, 0), 4), ((-1, 0), 1), ((-1, 0), 2), ((-1, 0), 3), ((-1, 0), 4))
    with pytest.raises(BudgetExceeded, match="budget exceeded") as info:
        phi_inf_numeric(w, CAT_MAP, Zero(), t_max=10_000)
    assert info.value.required == 8 * 10_000 ** 3
    monkeypatch.setenv("NC_TORUS_BUDGET", "100")
    with pytest.raises(BudgetExceeded):
        phi_inf_numeric(cancelling_word(), CAT_MAP, Zero(), t_max=1000)


def test_numeric_four_copies_small_horizon():
    w = FreeWord.of(((1, 0), 1), ((0, 1), 2), ((1, 1), 3), ((2, 1), 4), ((-1, 0), 1), ((0, -1), 2), ((-1, -1), 3), ((-2, -1), 4))
    th = special_theta(T5, 0, 1)
    res = phi_inf_numeric(w, T5, th, t_max=60)
    assert abs(complex(to_mpc(phi_inf_special(w, T5, 0, 1), 64)) - res.value) < 0.05


def test_order_experiment_examples():
    m, p = (1, 0), (0, 1)
    w = seven_letter_word(p, m)
    inner_first = average_order_experiment(w, T4, 0, 1, (3, 2, 1))
    assert inner_first == order_experiment_closed_form(T4, 1, m, p)
    assert average_order_experiment(w, T4, 0, 1, (1, 2, 3)) == 1
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        average_order_experiment(w, T4, 0, 0, (1, 2, 3))
    assert any("beta_r = 0" in str(c.message) for c in caught)


def test_order_experiment_closed_form_is_trivial_when_c_divisible():
    # K(T^s m, p) is constant in s modulo beta(1) - 2, and equals Delta there when c == 0 mod (beta(1)-2)
    for T in (T4, T5, trace_family(6)):
        for r in range(1, T.beta1 - 2):
            for m, p in itertools.product(itertools.product(range(-2, 3), repeat=2), repeat=2):
                assert order_experiment_closed_form(T, r, m, p) == 1


def test_genuine_order_sensitivity_for_trace_five():
    u = (1, 1)
    w = FreeWord.of((u, 1), (u, 2), (L.neg(u), 1), (L.neg(u), 2))
    a = average_order_experiment(w, T5, 0, 1, (2, 1))
    b = average_order_experiment(w, T5, 0, 1, (1, 2))
    assert a != b
    # the relabelled word under the standard order realises the other order, confirmed numerically
    th = special_theta(T5, 0, 1)
    swapped = w.relabel({1: 2, 2: 1})
    assert abs(complex(phi_inf_special(swapped, T5, 0, 1)) - phi_inf_numeric(swapped, T5, th, t_max=3000).value) < 1e-3
    assert not permutation_invariance_test(w, {1: 2, 2: 1}, SpecialEvaluator(T5, 0, 1))


def test_permutation_invariance_examples():
    rng = random.Random(5)
    gen = GenericEvaluator(CAT_MAP)
    w7 = seven_letter_word((0, 1), (1, 0))
    assert permutation_invariance_test(w7, {1: 3, 3: 1, 2: 2}, gen)
    assert permutation_invariance_test(cancelling_word(), {1: 2, 2: 1}, gen)
    assert permutation_invariance_test(w7, {1: 1, 2: 2, 3: 3}, SpecialEvaluator(T4, 0, 1))
    # the seven-letter word is in fact invariant under 1 <-> 3 at beta_r = 1/2
    for m, p in [((1, 0), (0, 1)), ((1, 1), (2, -1)), ((0, 1), (3, 1))]:
        assert permutation_invariance_test(seven_letter_word(p, m), {1: 3, 3: 1}, SpecialEvaluator(T4, 0, 1))


def test_d_factors_bounded_and_consistent():
    w = FreeWord.of(((1, 1), 1), ((1, 0), 2), ((2, 1), 3), ((-1, -1), 1), ((-1, 0), 2), ((-2, -1), 3))
    rw = regroup(w.monomial_words().__next__()[1])
    for T in (T4, T5):
        prod = Cyclotomic.rational(1)
        for df in d_factors(T, 1, rw):
            assert abs(complex(df.value)) <= 1 + 1e-12
            prod = prod * df.value
        assert prod == Cyclotomic.root(cross_limit_turns(T, 1, rw))


def test_separation_mask():
    mask = SeparationMask(3)
    assert mask([0, 4, 8]) == 1
    assert mask([0, 3, 10]) == 0
    assert mask([5]) == 1


def test_escape_separation_forces_balance():
    T = CAT_MAP
    vecs = [(1, 0), (0, 1), (1, -2), (2, 3)]
    d = escape_separation(T, vecs, 3)
    rng = random.Random(0)
    for _ in range(300):
        ns = [rng.choice(vecs + [(0, 0)]) for _ in range(3)]
        if all(n == (0, 0) for n in ns):
            continue
        t0 = rng.randint(-5, 5)
        ts = [t0, t0 + d + 1 + rng.randint(0, 3), t0 + 2 * d + 2 + rng.randint(0, 6)]
        total = L.vsum(T.apply(n, t) for n, t in zip(ns, ts))
        assert total != (0, 0)


@settings(max_examples=60, deadline=None)
@given(monomial_words(), st.lists(st.integers(-6, 6), min_size=3, max_size=3))
def test_regrouping_reassembles_the_phase(w, ts):
    times = {c: t for c, t in zip((1, 2, 3), ts)}
    for _, mw in w.monomial_words():
        rw = regroup(mw)
        assert rw.exponent_at(CAT_MAP, times) == direct_exponent(mw, CAT_MAP, times)


@settings(max_examples=60, deadline=None)
@given(monomial_words(), st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_cross_pair_form_when_balanced(w, ts):
    times = {c: t for c, t in zip((1, 2, 3), ts)}
    for _, mw in w.monomial_words():
        rw = regroup(mw)
        if not rw.balanced:
            continue
        total = rw.group_multiple()
        for (g, h), pairs in rw.cross_pairs().items():
            delta = times[rw.groups[h].copy] - times[rw.groups[g].copy]
            total += sum(L.symplectic(u, CAT_MAP.apply(v, delta)) for u, v in pairs)
        assert (total - direct_exponent(mw, CAT_MAP, times)).denominator == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(vec, vec), min_size=1, max_size=4), st.sampled_from([CAT_MAP, T4, T5]))
def test_identically_zero_certificate_matches_orbit_coefficients(pairs, T):
    A, B = pair_orbit_coefficients(T, pairs)
    assert pair_identically_zero(T, pairs) == (A.is_zero() and B.is_zero())


@settings(max_examples=40, deadline=None)
@given(monomial_words(), st.integers(1, 3), st.integers(0, 6))
def test_identity_insertion_does_not_change_value(w, copy, pos):
    pos = min(pos, len(w))
    ident = FreeLetter(WeylObservable.identity(), copy)
    w2 = FreeWord(w.letters[:pos] + (ident,) + w.letters[pos:])
    assert phi_inf_generic(w2, CAT_MAP) == phi_inf_generic(w, CAT_MAP)
    assert special_series(w2, T4, 1) == special_series(w, T4, 1)


def test_identity_insertion_numeric():
    w = FreeWord.of(((1, 0), 1), ((0, 1), 2), ((-1, 0), 1), ((0, -1), 2))
    w2 = FreeWord(w.letters[:2] + (FreeLetter(WeylObservable.identity(), 3),) + w.letters[2:])
    th = ExplicitReal.random(3)
    assert abs(phi_inf_numeric(w, CAT_MAP, th, 2000).value - phi_inf_numeric(w2, CAT_MAP, th, 2000).value) < 0.05


@settings(max_examples=40, deadline=None)
@given(monomial_words(), st.integers(1, 3), st.integers(-3, 3))
def test_time_translation_within_one_copy(w, copy, s):
    moved = FreeWord(tuple(FreeLetter(evolve(x.payload, T4, s), x.copy) if x.copy == copy else x for x in w.letters))
    assert phi_inf_generic(moved, T4) == phi_inf_generic(w, T4)
    assert special_series(moved, T4, 1) == special_series(w, T4, 1)


@settings(max_examples=40, deadline=None)
@given(monomial_words(max_letters=3))
def test_positivity(w):
    ww = word_adjoint(w) * w
    for th in (Rational(Fraction(2, 7)), ExplicitReal.random(11)):
        z = complex(to_mpc(phi_inf_generic(ww, T4).at(th), 64))
        assert z.real >= -1e-12 and abs(z.imag) < 1e-12
    z = complex(to_mpc(phi_inf_special(ww, T4, 0, 1), 64))
    assert z.real >= -1e-12 and abs(z.imag) < 1e-12


@settings(max_examples=40, deadline=None)
@given(monomial_words())
def test_zero_residue_factorises_over_groups(w):
    th = special_theta(CAT_MAP, 1, 0)
    expected = Cyclotomic.rational(0)
    total = 0j
    for c, mw in w.monomial_words():
        rw = regroup(mw)
        prod = complex(to_mpc(c, 64))
        for g in rw.groups:
            prod *= complex(to_mpc(product_expectation([WeylObservable.monomial(v) for v in g.vectors], th), 64))
        total += prod
    assert abs(complex(to_mpc(phi_inf_special(w, CAT_MAP, 1, 0), 64)) - total) < 1e-12


def test_zero_residue_differs_from_generic_on_crossing_words():
    u, v = (1, 0), (0, 1)
    w = FreeWord.of((u, 1), (v, 2), (L.neg(u), 1), (L.neg(v), 2))
    assert phi_inf_generic(w, CAT_MAP) == 0
    assert phi_inf_special(w, CAT_MAP, 1, 0) == 1


def test_word_json_roundtrip():
    w = cancelling_word((2, -1))
    assert FreeWord.from_json(w.to_json()) == w
