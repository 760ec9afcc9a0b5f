"""Words in the asymptotic free algebra and evaluators for the asymptotic state.

A word is a sequence of letters X_{copy}; letter j is evolved to time t_{copy(j)}
and phi_inf averages phi(X^(1)(t_..) ... X^(n)(t_..)) over the copy times with
nested Cesaro means, innermost copy first (copy order ascending by default).

For a monomial word W(n_1)_{c_1} ... W(n_k)_{c_k} regrouped by copy p:

* the product is e^{2 pi i theta E(t)} W(sum_p T^{t_p} n_p), with group sums n_p;
* for pairwise separated times the trace is nonzero only when every n_p = 0;
* then E(t) = sum_p G_p + sum_{g<h} P_gh(t_h - t_g), where
  G_p = sum_{i<j in I_p} sigma(n_i, n_j)/2 and
  P_gh(delta) = sum_{i in I_g, j in I_h, i<j} sigma(n_i, T^delta n_j).

P_gh obeys P(delta+1) = beta(1) P(delta) - P(delta-1), so it vanishes identically
iff P(0) = P(1) = 0. Three evaluators are built on this regrouping:

* ``phi_inf_generic``: symbolic theta; a cross term survives only if P_gh == 0.
* ``phi_inf_special``: theta at a special quadratic value; every cross term
  converges to an exact root of unity (order beta(1) - 2).
* ``phi_inf_numeric``: brute-force Cesaro averaging with a separation window.
"""

from __future__ import annotations

import itertools
import math
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import mpmath
import numpy as np

from . import lattice as L
from .lattice import IntVec2, symplectic
from .quadratic import QuadraticNumber
from .scalars import (
    ONE,
    ZERO,
    Cyclotomic,
    Scalar,
    ThetaSeries,
    pairwise_sum,
    s_is_zero,
    sadd,
    sconj,
    smul,
    to_mpc,
    to_scalar,
)
from .spectral_number_theory import (
    HyperbolicMatrix,
    asymptotic_form,
    beta_r,
    delta_form,
    matrix_power,
    orbit_coefficients,
    special_theta,
)
from .theta import (
    ExplicitReal,
    GenericIrrational,
    Rational,
    SpecialQuadratic,
    ThetaParameter,
    Zero,
)
from .weyl_algebra import (
    WeylMonomial,
    WeylObservable,
    adjoint,
    evolve,
    mul_observables,
    product_phase_multiple,
)

DEFAULT_TMAX = 10_000
DEFAULT_SEP = 10
DEFAULT_TOLERANCE = 0.05
DEFAULT_BUDGET = 10 ** 9

MonomialWord = Tuple[Tuple[IntVec2, int], ...]


class BudgetExceeded(RuntimeError):
    def __init__(self, required: int, budget: int):
        super().__init__(f"budget exceeded: need {required}, budget is {budget} (set NC_TORUS_BUDGET)")
        self.required = required
        self.budget = budget


def configured_budget() -> int:
    raw = os.environ.get("NC_TORUS_BUDGET")
    return int(float(raw)) if raw else DEFAULT_BUDGET


# ---------------------------------------------------------------------------
# words


@dataclass(frozen=True)
class FreeLetter:
    payload: WeylObservable
    copy: int

    def __post_init__(self):
        if isinstance(self.payload, WeylMonomial):
            object.__setattr__(self, "payload", WeylObservable({self.payload.vector: self.payload.scalar()}))
        if self.payload.is_zero():
            raise ValueError("letter payload must be nonzero")
        if self.copy < 1:
            raise ValueError("copy index must be a positive integer")

    @classmethod
    def weyl(cls, vector, copy: int, coeff=1) -> "FreeLetter":
        return cls(WeylObservable.monomial(vector, coeff), copy)

    def is_identity_multiple(self) -> bool:
        return set(self.payload.support) == {L.ZERO}


@dataclass(frozen=True)
class FreeWord:
    letters: Tuple[FreeLetter, ...]
    coeff: Scalar = ONE

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        if not isinstance(self.coeff, (Cyclotomic, mpmath.mpc)):
            object.__setattr__(self, "coeff", to_scalar(self.coeff))

    @classmethod
    def of(cls, *letters: Tuple[IntVec2, int]) -> "FreeWord":
        """Word of unit Weyl monomials from (vector, copy) pairs."""
        return cls(tuple(FreeLetter.weyl(v, c) for v, c in letters))

    @property
    def copies(self) -> Tuple[int, ...]:
        return tuple(sorted({x.copy for x in self.letters}))

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        return FreeWord(self.letters + other.letters, smul(self.coeff, other.coeff))

    def relabel(self, pi: Mapping[int, int]) -> "FreeWord":
        return FreeWord(tuple(FreeLetter(x.payload, pi.get(x.copy, x.copy)) for x in self.letters), self.coeff)

    def is_normal(self) -> bool:
        if any(x.is_identity_multiple() for x in self.letters):
            return False
        return all(a.copy != b.copy for a, b in zip(self.letters, self.letters[1:]))

    def monomial_words(self) -> Iterable[Tuple[Scalar, MonomialWord]]:
        """Distributive expansion into (coefficient, monomial word)."""
        supports = [list(x.payload.support.items()) for x in self.letters]
        for combo in itertools.product(*supports):
            c = self.coeff
            for _, a in combo:
                c = smul(c, a)
            yield c, tuple((v, x.copy) for (v, _), x in zip(combo, self.letters))

    def to_json(self) -> list:
        return [{"copy": x.copy, "terms": x.payload.to_json()} for x in self.letters]

    @classmethod
    def from_json(cls, letters: list) -> "FreeWord":
        return cls(tuple(FreeLetter(WeylObservable.from_json(x["terms"]), int(x["copy"])) for x in letters))


def word_adjoint(w: FreeWord) -> FreeWord:
    return FreeWord(tuple(FreeLetter(adjoint(x.payload), x.copy) for x in reversed(w.letters)), sconj(w.coeff))


def normalize(w: FreeWord, theta: ThetaParameter) -> FreeWord:
    """Drop identity letters and multiply adjacent letters of the same copy, until stable."""
    coeff = w.coeff
    letters = list(w.letters)
    changed = True
    while changed:
        changed = False
        out: List[FreeLetter] = []
        for x in letters:
            if x.is_identity_multiple():
                coeff = smul(coeff, x.payload.coefficient(L.ZERO))
                changed = True
                continue
            if out and out[-1].copy == x.copy:
                prod = mul_observables(out[-1].payload, x.payload, theta)
                out.pop()
                changed = True
                if prod.is_zero():
                    return FreeWord((), ZERO)
                out.append(FreeLetter(prod, x.copy))
                continue
            out.append(x)
        letters = out
    return FreeWord(tuple(letters), coeff)


def cancelling_word(n: IntVec2 = (1, 0)) -> FreeWord:
    """W(n)_1 W(n)_2 W(-2n)_1 W(n)_2 W(n)_1 W(-2n)_2: every cross-copy phase cancels, so its generic value is 1."""
    n = L.vec(n)
    m2 = L.scale(-2, n)
    return FreeWord.of((n, 1), (n, 2), (m2, 1), (n, 2), (n, 1), (m2, 2))


def seven_letter_word(p: IntVec2, m: IntVec2) -> FreeWord:
    """W(p)_3 W(p)_1 W(m)_3 W(-m)_2 W(-p)_1 W(m)_2 W(-p-m)_3."""
    p, m = L.vec(p), L.vec(m)
    return FreeWord.of((p, 3), (p, 1), (m, 3), (L.neg(m), 2), (L.neg(p), 1), (m, 2), (L.neg(L.add(p, m)), 3))


# ---------------------------------------------------------------------------
# regrouping


@dataclass(frozen=True)
class Group:
    copy: int
    indices: Tuple[int, ...]
    vectors: Tuple[IntVec2, ...]
    total: IntVec2
    phase_multiple: Fraction  # G_p = multiple * theta turns


@dataclass(frozen=True)
class RegroupedWord:
    word: MonomialWord
    groups: Tuple[Group, ...]
    # (k, p, u, v): theta*sigma(T^{t_k} u, T^{t_p} v)/2 turns for each ordered cross pair
    ledger: Tuple[Tuple[int, int, IntVec2, IntVec2], ...]

    @property
    def balanced(self) -> bool:
        return all(g.total == L.ZERO for g in self.groups)

    def group_multiple(self) -> Fraction:
        return sum((g.phase_multiple for g in self.groups), Fraction(0))

    def cross_pairs(self) -> Dict[Tuple[int, int], List[Tuple[IntVec2, IntVec2]]]:
        """(g, h) with g < h (group positions) -> pairs (n_i, n_j), i in I_g, j in I_h, i < j."""
        slot = {}
        for gi, g in enumerate(self.groups):
            for i in g.indices:
                slot[i] = gi
        out: Dict[Tuple[int, int], List[Tuple[IntVec2, IntVec2]]] = {}
        for (i, (u, _)), (j, (v, _)) in itertools.combinations(enumerate(self.word), 2):
            gi, gj = slot[i], slot[j]
            if gi == gj:
                continue
            g, h = min(gi, gj), max(gi, gj)
            out.setdefault((g, h), [])
            if gi < gj:
                out[(g, h)].append((u, v))
        return out

    def exponent_at(self, T: HyperbolicMatrix, times: Mapping[int, int]) -> Fraction:
        """Reassembled theta-multiple of the full product at explicit copy times."""
        total = self.group_multiple()
        for k, p, u, v in self.ledger:
            total += Fraction(symplectic(L.matvec(matrix_power(T, times[k]), u), L.matvec(matrix_power(T, times[p]), v)), 2)
        return total


def regroup(word: MonomialWord) -> RegroupedWord:
    by_copy: Dict[int, List[int]] = {}
    for i, (_, c) in enumerate(word):
        by_copy.setdefault(c, []).append(i)
    groups = []
    for c in sorted(by_copy):
        idx = tuple(by_copy[c])
        vecs = tuple(word[i][0] for i in idx)
        groups.append(Group(c, idx, vecs, L.vsum(vecs), product_phase_multiple(vecs)))
    ledger = tuple(
        (word[i][1], word[j][1], word[i][0], word[j][0])
        for i, j in itertools.combinations(range(len(word)), 2)
        if word[i][1] != word[j][1]
    )
    return RegroupedWord(word, tuple(groups), ledger)


def direct_exponent(word: MonomialWord, T: HyperbolicMatrix, times: Mapping[int, int]) -> Fraction:
    return product_phase_multiple([L.matvec(matrix_power(T, times[c]), v) for v, c in word])


def pair_sequence_seeds(T: HyperbolicMatrix, pairs: Sequence[Tuple[IntVec2, IntVec2]]) -> Tuple[int, int]:
    """P(0), P(1) for P(delta) = sum sigma(u, T^delta v)."""
    p0 = sum(symplectic(u, v) for u, v in pairs)
    p1 = sum(symplectic(u, L.matvec(T.rows, v)) for u, v in pairs)
    return p0, p1


def pair_identically_zero(T: HyperbolicMatrix, pairs: Sequence[Tuple[IntVec2, IntVec2]]) -> bool:
    p0, p1 = pair_sequence_seeds(T, pairs)
    return p0 == 0 and p1 == 0


def pair_orbit_coefficients(T: HyperbolicMatrix, pairs: Sequence[Tuple[IntVec2, IntVec2]]) -> Tuple[QuadraticNumber, QuadraticNumber]:
    A = QuadraticNumber.rational(0, T.disc)
    B = QuadraticNumber.rational(0, T.disc)
    for u, v in pairs:
        a, b = orbit_coefficients(T, u, v)
        A, B = A + a, B + b
    return A, B


# ---------------------------------------------------------------------------
# generic theta


def _generic_monomial(T: HyperbolicMatrix, rw: RegroupedWord) -> Optional[Fraction]:
    """theta-multiple of the surviving phase, or None when the average vanishes."""
    if not rw.balanced:
        return None
    for pairs in rw.cross_pairs().values():
        if not pair_identically_zero(T, pairs):
            return None
    return rw.group_multiple()


def phi_inf_generic(w: FreeWord, T: HyperbolicMatrix) -> ThetaSeries:
    """Asymptotic state at a generic theta, as an exact series in theta."""
    terms: Dict[Fraction, List[Scalar]] = {}
    for c, mw in w.monomial_words():
        k = _generic_monomial(T, regroup(mw))
        if k is not None:
            terms.setdefault(k, []).append(c)
    return ThetaSeries({k: pairwise_sum(v) for k, v in terms.items()})


# ---------------------------------------------------------------------------
# special theta


@dataclass(frozen=True)
class DFactor:
    p: int
    value: Cyclotomic


def _resolve_order(copies: Sequence[int], order: Optional[Sequence[int]]) -> List[int]:
    """Averaging order, innermost first. ``order`` is written outermost first (Avg_3 Avg_2 Avg_1 = (3, 2, 1))."""
    if order is None:
        return sorted(copies)
    inner_first = list(reversed(list(order)))
    missing = set(copies) - set(inner_first)
    if missing:
        raise ValueError(f"averaging order misses copies {sorted(missing)}")
    return [c for c in inner_first if c in set(copies)]


def cross_limit_turns(T: HyperbolicMatrix, r: int, rw: RegroupedWord, order: Optional[Sequence[int]] = None) -> Fraction:
    """Sum of the limits of theta*P_gh at a special theta, for the given averaging order.

    The copy averaged first is sent to +infinity relative to the other one:
    theta*sigma(u, T^delta v) -> beta_r K(u, v) as delta -> +oo and -beta_r K(v, u)
    as delta -> -oo.
    """
    br = beta_r(T, r)
    rank = {c: k for k, c in enumerate(_resolve_order([g.copy for g in rw.groups], order))}
    total = Fraction(0)
    for (g, h), pairs in rw.cross_pairs().items():
        cg, ch = rw.groups[g].copy, rw.groups[h].copy
        # P_gh(delta), delta = t_h - t_g; inner g means delta -> -oo
        if rank[cg] < rank[ch]:
            total += sum(-br * asymptotic_form(T, v, u) for u, v in pairs)
        else:
            total += sum(br * asymptotic_form(T, u, v) for u, v in pairs)
    return total % 1


def d_factors(T: HyperbolicMatrix, r: int, rw: RegroupedWord) -> List[DFactor]:
    """Per-slot cyclotomic averages over one period of T modulo beta(1) - 2 (standard order).

    D^h = 1/(beta(1)-2) * sum_s exp(2 pi i * sum_{g<h} sum_{i in I_g, j in I_h, i<j} -beta_r K(T^s n_j, n_i)).
    Because K(T x, y) = K(x, y) - (beta(1)-2) sigma(x, y), all summands coincide.
    """
    br = beta_r(T, r)
    period = T.beta1 - 2
    pairs_by = rw.cross_pairs()
    out = []
    for h in range(1, len(rw.groups)):
        acc = ZERO
        for s in range(period):
            M = matrix_power(T, s)
            turns = Fraction(0)
            for g in range(h):
                for u, v in pairs_by.get((g, h), []):
                    turns += -br * asymptotic_form(T, L.matvec(M, v), u)
            acc = acc + Cyclotomic.root(turns)
        out.append(DFactor(rw.groups[h].copy, acc * Fraction(1, period)))
    return out


def _special_monomial(T: HyperbolicMatrix, r: int, rw: RegroupedWord, include_group_phases: bool,
                      order: Optional[Sequence[int]]) -> Optional[ThetaSeries]:
    if not rw.balanced:
        return None
    if order is None:
        cross = ONE
        for df in d_factors(T, r, rw):
            cross = cross * df.value
    else:
        cross = Cyclotomic.root(cross_limit_turns(T, r, rw, order))
    k = rw.group_multiple() if include_group_phases else Fraction(0)
    return ThetaSeries.phase(k, cross)


def phi_inf_special(w: FreeWord, T: HyperbolicMatrix, ell: int, r: int, *, include_group_phases: bool = True,
                    order: Optional[Sequence[int]] = None) -> Scalar:
    """Asymptotic state at theta = lambda*ell + (lambda - 1)*beta_r mod 1."""
    theta = special_theta(T, ell, r)
    return special_series(w, T, r, include_group_phases=include_group_phases, order=order).at(theta)


def special_series(w: FreeWord, T: HyperbolicMatrix, r: int, *, include_group_phases: bool = True,
                   order: Optional[Sequence[int]] = None) -> ThetaSeries:
    """The special-theta value with the group phases kept symbolic in theta."""
    beta_r(T, r)
    acc = ThetaSeries()
    for c, mw in w.monomial_words():
        v = _special_monomial(T, r, regroup(mw), include_group_phases, order)
        if v is not None:
            acc = acc + v * c
    return acc


def average_order_experiment(w: FreeWord, T: HyperbolicMatrix, ell: int, r: int, order: Sequence[int]) -> Cyclotomic:
    """Iterated limit of the cross-time phases for a caller-chosen averaging order.

    ``order`` is written as the operator product, outermost first:
    (3, 2, 1) means Avg_3 Avg_2 Avg_1 (copy 1 innermost). Group phases are not included.
    """
    if beta_r(T, r) == 0:
        warnings.warn("beta_r = 0: every averaging order gives the same value", stacklevel=2)
    acc = ZERO
    for c, mw in w.monomial_words():
        rw = regroup(mw)
        if rw.balanced:
            acc = acc + Cyclotomic.root(cross_limit_turns(T, r, rw, order)) * c
    return acc


def order_experiment_closed_form(T: HyperbolicMatrix, r: int, m: IntVec2, p: IntVec2) -> Cyclotomic:
    """(1/(beta(1)-2))^2 |sum_{s} e^{2 pi i beta_r Delta(T^s m, p)}|^2."""
    br = beta_r(T, r)
    period = T.beta1 - 2
    z = ZERO
    for s in range(period):
        z = z + Cyclotomic.root(br * delta_form(T, T.apply(m, s), p))
    return z * z.conjugate() * Fraction(1, period * period)


def find_order_sensitive_pair(T: HyperbolicMatrix, r: int, radius: int = 3):
    """Search small (m, p) for which the order-experiment closed form differs from 1."""
    rng = range(-radius, radius + 1)
    for m in itertools.product(rng, rng):
        for p in itertools.product(rng, rng):
            if m == L.ZERO or p == L.ZERO:
                continue
            if order_experiment_closed_form(T, r, m, p) != 1:
                return m, p
    return None


# ---------------------------------------------------------------------------
# numeric nested averages


@dataclass(frozen=True)
class SeparationMask:
    d: int

    def __call__(self, times: Sequence[int]) -> int:
        for a, b in itertools.combinations(times, 2):
            if abs(a - b) <= self.d:
                return 0
        return 1


def left_eigen_coordinate(T: HyperbolicMatrix, n: IntVec2, prec: int = 80) -> mpmath.mpf:
    """Coordinate of n along the expanding eigendirection: (lambda - d) n1 + b n2."""
    with mpmath.workprec(prec):
        return (T.lam.to_mpf(prec) - T.d) * n[0] + T.b * n[1]


def escape_separation(T: HyperbolicMatrix, vectors: Iterable[IntVec2], slots: int) -> int:
    """Smallest d such that sum_p T^{t_p} n_p != 0 whenever the t_p differ pairwise by
    more than d and some n_p (drawn from ``vectors``) is nonzero."""
    coords = [abs(left_eigen_coordinate(T, v)) for v in vectors if v != L.ZERO]
    if not coords or slots < 2:
        return 0
    lo, hi = min(coords), max(coords)
    lam = T.lam.to_mpf(80)
    need = (slots - 1) * hi / lo
    d = 0
    while lam ** (d + 1) <= need * 2:
        d += 1
    return d


@dataclass(frozen=True)
class NumericResult:
    value: complex
    error: float
    t_max: int
    separation: int


def _phase_table(T: HyperbolicMatrix, theta: ThetaParameter, seeds: Tuple[int, int], lo: int, hi: int) -> np.ndarray:
    """frac(theta * P(-g)) for g = lo..hi-1, as float64 turns, P given by P(0), P(1)."""
    p0, p1 = seeds
    beta = T.beta1
    count = hi - lo
    if isinstance(theta, Zero) or (p0 == 0 and p1 == 0):
        return np.zeros(count)
    if isinstance(theta, Rational):
        a, q = theta.value.numerator, theta.value.denominator
        mod, x0, x1, to_turns = q, (a * p0) % q, (a * p1) % q, (lambda x: x / q)
    else:
        lam_bits = max(1, math.ceil(float(mpmath.log(T.lam.to_mpf(64), 2)) * (hi + 2)))
        bits = lam_bits + max(p0.bit_length(), p1.bit_length()) + 72
        Theta = theta.fixed_point(bits)
        mod = 1 << bits
        x0, x1 = (Theta * p0) % mod, (Theta * p1) % mod
        shift = bits - 53
        to_turns = lambda x: (x >> shift) / float(1 << 53)
    # walk downwards: X(delta-1) = beta X(delta) - X(delta+1)
    out = np.empty(count)
    cur, nxt = x0, x1  # X(0), X(1)
    for g in range(0, hi):
        if g >= lo:
            out[g - lo] = to_turns(cur)
        cur, nxt = (beta * cur - nxt) % mod, cur
    return out


def _average_balanced(T: HyperbolicMatrix, theta: ThetaParameter, rw: RegroupedWord, t_max: int, sep: int) -> complex:
    """Mean of e^{2 pi i theta sum P_gh} over gaps g_k in [sep+1, sep+t_max), standard order."""
    s = len(rw.groups)
    if s == 1:
        return 1.0 + 0j
    pairs = rw.cross_pairs()
    lo, n = sep + 1, t_max
    # gap between consecutive slots q (inner) and q+1 (outer): t_q - t_{q+1} = g_q
    # t_g - t_h for g < h equals g_g + ... + g_{h-1}, i.e. P_gh is evaluated at minus that sum
    if s == 2:
        tab = _phase_table(T, theta, pair_sequence_seeds(T, pairs.get((0, 1), [])), lo, lo + n)
        return complex(np.exp(2j * np.pi * tab).mean())
    if s == 3:
        a = np.exp(2j * np.pi * _phase_table(T, theta, pair_sequence_seeds(T, pairs.get((0, 1), [])), lo, lo + n))
        b = np.exp(2j * np.pi * _phase_table(T, theta, pair_sequence_seeds(T, pairs.get((1, 2), [])), lo, lo + n))
        c = np.exp(2j * np.pi * _phase_table(T, theta, pair_sequence_seeds(T, pairs.get((0, 2), [])), 2 * lo, 2 * lo + 2 * n - 1))
        size = 1 << (2 * n - 1).bit_length()
        conv = np.fft.ifft(np.fft.fft(a, size) * np.fft.fft(b, size))[: 2 * n - 1]
        return complex((conv * c).sum() / (n * n))
    # general case: explicit loops over all but the two innermost gaps
    span = (s - 1) * (lo + n)
    tables = {
        key: np.exp(2j * np.pi * _phase_table(T, theta, pair_sequence_seeds(T, prs), 0, span))
        for key, prs in pairs.items()
    }
    gaps = np.arange(lo, lo + n)
    total = 0j
    for outer in itertools.product(range(lo, lo + n), repeat=s - 3):
        # gaps g_0, g_1 vectorised; g_2.. fixed from ``outer``
        g0 = gaps[:, None]
        g1 = gaps[None, :]
        allg = [g0, g1] + [np.full((1, 1), x) for x in outer]
        prod = np.ones((n, n), dtype=complex)
        for (g, h), tab in tables.items():
            idx = sum(allg[g:h])
            prod = prod * tab[idx]
        total += prod.sum()
    return total / n ** (s - 1)


def phi_inf_numeric(w: FreeWord, T: HyperbolicMatrix, theta: ThetaParameter, t_max: int = DEFAULT_TMAX,
                    d: int = DEFAULT_SEP, budget: Optional[int] = None) -> NumericResult:
    """Truncated nested Cesaro averages (innermost copy 1) on pairwise separated times.

    The integrand depends only on time differences, so each inner time runs over a
    window of length t_max starting d+1 after the next outer time; the outermost
    average is then trivial. The separation is raised to the escape bound so that the
    trace only fires on balanced monomial words. The error estimate is the change
    between the t_max and t_max/2 truncations.
    """
    if isinstance(theta, GenericIrrational):
        raise ValueError("the numeric evaluator needs a numeric theta")
    budget = configured_budget() if budget is None else budget
    s = len(w.copies)
    required = max(1, len(w)) * t_max ** max(1, s - 1)
    if required > budget:
        raise BudgetExceeded(required, budget)
    monos = list(w.monomial_words())
    vecs = {v for _, mw in monos for v, _ in mw}
    group_vecs = set()
    for _, mw in monos:
        for g in regroup(mw).groups:
            group_vecs.add(g.total)
    sep = max(d, escape_separation(T, group_vecs | vecs, s))
    results = []
    for horizon in (t_max, max(1, t_max // 2)):
        parts = []
        for c, mw in monos:
            rw = regroup(mw)
            if not rw.balanced:
                continue
            g = complex(to_mpc(theta.phase_turns(rw.group_multiple()).to_scalar(), 64))
            parts.append(complex(to_mpc(c, 64)) * g * _average_balanced(T, theta, rw, horizon, sep))
        results.append(_tree_sum(parts))
    return NumericResult(results[0], abs(results[0] - results[1]), t_max, sep)


def _tree_sum(values: List[complex]) -> complex:
    items = list(values)
    if not items:
        return 0j
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


# ---------------------------------------------------------------------------
# evaluators as objects


class Evaluator:
    permutation_invariant = False
    exact = True

    def __call__(self, w: FreeWord):
        raise NotImplementedError


@dataclass
class GenericEvaluator(Evaluator):
    T: HyperbolicMatrix
    permutation_invariant = True

    def __call__(self, w: FreeWord) -> ThetaSeries:
        return phi_inf_generic(w, self.T)


@dataclass
class SpecialEvaluator(Evaluator):
    T: HyperbolicMatrix
    ell: int
    r: int
    include_group_phases: bool = True
    symbolic: bool = True

    @property
    def permutation_invariant(self) -> bool:
        return beta_r(self.T, self.r) == 0

    @property
    def theta(self) -> SpecialQuadratic:
        return special_theta(self.T, self.ell, self.r)

    def __call__(self, w: FreeWord):
        series = special_series(w, self.T, self.r, include_group_phases=self.include_group_phases)
        return series if self.symbolic else series.at(self.theta)


@dataclass
class NumericEvaluator(Evaluator):
    T: HyperbolicMatrix
    theta: ThetaParameter
    t_max: int = DEFAULT_TMAX
    d: int = DEFAULT_SEP
    tolerance: float = DEFAULT_TOLERANCE
    exact = False

    def __call__(self, w: FreeWord) -> complex:
        return phi_inf_numeric(w, self.T, self.theta, self.t_max, self.d).value


def values_equal(a, b, tolerance: float = DEFAULT_TOLERANCE) -> bool:
    if isinstance(a, ThetaSeries) and isinstance(b, ThetaSeries):
        return a == b
    if isinstance(a, Cyclotomic) and isinstance(b, Cyclotomic):
        return a == b
    za = complex(to_mpc(a.scalar() if isinstance(a, ThetaSeries) else a, 64))
    zb = complex(to_mpc(b.scalar() if isinstance(b, ThetaSeries) else b, 64))
    return abs(za - zb) <= tolerance


def permutation_invariance_test(w: FreeWord, pi: Mapping[int, int], evaluator: Callable[[FreeWord], object],
                                tolerance: float = DEFAULT_TOLERANCE) -> bool:
    """phi_inf(w) == phi_inf(pi . w), exactly for symbolic evaluators."""
    if sorted(pi.keys()) != sorted(pi.values()):
        raise ValueError("relabelling must be a bijection")
    return values_equal(evaluator(w), evaluator(w.relabel(pi)), tolerance)
