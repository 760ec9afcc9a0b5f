"""Scans of the clustering hierarchy and the equidistribution statistic.

weak:    phi(X Y(t) Z) -> phi(X Z) phi(Y)
strong:  phi([W(m), W(T^t n)]* [W(m), W(T^t n)]) = 4 sin^2(pi theta sigma(m, T^t n)) -> 0
"""

from __future__ import annotations

import csv
import io
import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from . import lattice as L
from .free_product_state import escape_separation, left_eigen_coordinate
from .lattice import IntVec2, symplectic
from .scalars import ONE, ZERO, Cyclotomic, Scalar, ThetaSeries, pairwise_sum, to_mpc
from .spectral_number_theory import HyperbolicMatrix, asymptotic_form, matrix_power
from .theta import ExplicitReal, GenericIrrational, Rational, SpecialQuadratic, ThetaParameter, Zero
from .weyl_algebra import WeylObservable, commutator_defect, evolve, product_phase_multiple

EXACT_DECAY_TOL = 1e-6
CESARO_TOL = 1e-2


@dataclass
class ClusterScan:
    times: List[int]
    values: List[object]
    target: object = 0
    tolerance: float = EXACT_DECAY_TOL

    def magnitudes(self) -> List[float]:
        return [_magnitude(v, self.target) for v in self.values]

    @property
    def converged(self) -> bool:
        """True when the last quarter of the scan lies within tolerance of the target."""
        if not self.values:
            return False
        mags = self.magnitudes()
        tail = mags[len(mags) - max(1, len(mags) // 4):]
        return all(m <= self.tolerance for m in tail)

    @property
    def verdict(self) -> str:
        return "converged" if self.converged else "not-converged"

    def recurrent_values(self, min_count: int = 3, digits: int = 12) -> Dict[float, int]:
        """Values (rounded) hit at least ``min_count`` times, i.e. visited again and again."""
        counts = Counter(round(m, digits) for m in self.magnitudes())
        return {v: c for v, c in counts.items() if c >= min_count}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# nc-torus-lab v1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value_re", "value_im", "abs_value"])
        for t, v in zip(self.times, self.values):
            z = _complex(v)
            w.writerow([t, repr(z.real), repr(z.imag), repr(abs(z))])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "times": self.times,
            "values": [[_complex(v).real, _complex(v).imag] for v in self.values],
            "verdict": self.verdict,
            "tolerance": self.tolerance,
        }


def _complex(v) -> complex:
    if isinstance(v, ThetaSeries):
        if v.is_zero():
            return 0j
        if v.is_scalar():
            return complex(to_mpc(v.scalar(), 64))
        return complex(float("nan"), 0)
    return complex(to_mpc(v, 64))


def _magnitude(v, target) -> float:
    if isinstance(v, ThetaSeries):
        diff = v + ThetaSeries.constant(target) * Cyclotomic.rational(-1) if not isinstance(target, ThetaSeries) else v + target * Cyclotomic.rational(-1)
        if diff.is_zero():
            return 0.0
        if diff.is_scalar():
            return abs(complex(to_mpc(diff.scalar(), 64)))
        # symbolic residue: bound by the sum of coefficient sizes
        return float(sum(abs(complex(to_mpc(c, 64))) for c in diff.terms.values()))
    return abs(_complex(v) - _complex(target if not isinstance(target, int) else Cyclotomic.rational(target)))


# ---------------------------------------------------------------------------
# expectations of products of observables (theta symbolic or numeric)


def product_expectation(observables: Sequence[WeylObservable], theta: ThetaParameter):
    """phi(X_1 ... X_k); a ThetaSeries for generic theta, a scalar otherwise."""
    series: Dict[Fraction, List[Scalar]] = {}
    for combo in itertools.product(*[list(X.support.items()) for X in observables]):
        vecs = [v for v, _ in combo]
        if L.vsum(vecs) != L.ZERO:
            continue
        c = ONE
        for _, a in combo:
            c = c * a if isinstance(c, Cyclotomic) and isinstance(a, Cyclotomic) else to_mpc(c) * to_mpc(a)
        series.setdefault(product_phase_multiple(vecs), []).append(c)
    out = ThetaSeries({k: pairwise_sum(v) for k, v in series.items()})
    return out if isinstance(theta, GenericIrrational) else out.at(theta)


def _sub(a, b):
    if isinstance(a, ThetaSeries) or isinstance(b, ThetaSeries):
        a = a if isinstance(a, ThetaSeries) else ThetaSeries.constant(a)
        b = b if isinstance(b, ThetaSeries) else ThetaSeries.constant(b)
        return a + b * Cyclotomic.rational(-1)
    if isinstance(a, Cyclotomic) and isinstance(b, Cyclotomic):
        return a - b
    return to_mpc(a) - to_mpc(b)


def _mul(a, b):
    if isinstance(a, ThetaSeries) or isinstance(b, ThetaSeries):
        a = a if isinstance(a, ThetaSeries) else ThetaSeries.constant(a)
        b = b if isinstance(b, ThetaSeries) else ThetaSeries.constant(b)
        return a * b
    if isinstance(a, Cyclotomic) and isinstance(b, Cyclotomic):
        return a * b
    return to_mpc(a) * to_mpc(b)


def weak_clustering_scan(X: WeylObservable, Y: WeylObservable, Z: WeylObservable, T: HyperbolicMatrix,
                         theta: ThetaParameter, t_range: Sequence[int]) -> ClusterScan:
    """Defect phi(X Y(t) Z) - phi(X Z) phi(Y) over t_range."""
    base = _mul(product_expectation([X, Z], theta), product_expectation([Y], theta))
    values = [_sub(product_expectation([X, evolve(Y, T, t), Z], theta), base) for t in t_range]
    return ClusterScan(list(t_range), values, 0, EXACT_DECAY_TOL)


def strong_clustering_scan(m: IntVec2, n: IntVec2, T: HyperbolicMatrix, theta: ThetaParameter,
                           t_range: Sequence[int]) -> ClusterScan:
    values = [mpmath.mpc(commutator_defect(m, n, t, T, theta)) for t in t_range]
    return ClusterScan(list(t_range), values, 0, EXACT_DECAY_TOL)


def support_escape_time(T: HyperbolicMatrix, inner: Sequence[IntVec2], n: IntVec2) -> int:
    """First t >= 1 from which T^s n (s >= t) avoids every difference of ``inner`` vectors.

    Uses the expanding coordinate: once |c_+(T^t n)| exceeds the largest |c_+| of the
    differences, the orbit cannot return (|c_+| grows by lambda each step).
    """
    if n == L.ZERO:
        raise ValueError("n must be nonzero")
    diffs = [L.add(a, L.neg(b)) for a in inner for b in inner] + list(inner)
    bound = max((abs(left_eigen_coordinate(T, v)) for v in diffs), default=mpmath.mpf(0))
    c = abs(left_eigen_coordinate(T, n))
    lam = T.lam.to_mpf(80)
    t = 1
    while c * lam ** t <= bound:
        t += 1
    return t


# ---------------------------------------------------------------------------
# an unmatched centred letter kills the expectation


@dataclass(frozen=True)
class Witness:
    holds: bool
    separation: int
    checked_configurations: int


def condition_3_8_witness(letters: Sequence[Tuple[WeylObservable, int]], middle: WeylObservable, position: int,
                          T: HyperbolicMatrix, samples: int = 200, seed: int = 0) -> Witness:
    """Verify that phi(f1(t_.) ... f_j(t_.) g f_{j+1}(t_.) ...) = 0 once all times (and the fixed
    time 0 of g) are pairwise separated beyond the escape bound.

    ``letters`` are (observable, copy) pairs; ``middle`` (centred) is inserted at ``position``.
    The trace fires only if sum_p T^{t_p} n_p + m = 0 with m in supp g, m != 0; the escape
    bound treats g as an extra time slot, which forces m = 0, a contradiction. A random
    sample of separated time configurations is checked explicitly as well.
    """
    if not middle.is_centred():
        raise ValueError("precondition violated: the middle observable must be centred")
    copies = sorted({c for _, c in letters})
    slots = len(copies) + 1
    vecs = set(middle.support)
    for combo in itertools.product(*[list(X.support) for X, _ in letters]):
        groups: Dict[int, IntVec2] = {}
        for v, (_, c) in zip(combo, letters):
            groups[c] = L.add(groups.get(c, L.ZERO), v)
        vecs |= set(groups.values())
    d = escape_separation(T, vecs, slots)
    rng = random.Random(seed)
    checked = 0
    for _ in range(samples):
        # sorted separated times, one of which is 0 (the middle letter)
        gaps = [d + 1 + rng.randrange(5) for _ in range(slots - 1)]
        ts = list(itertools.accumulate([0] + gaps))
        shift = ts[rng.randrange(slots)]
        ts = [t - shift for t in ts]
        zero_slot = ts.index(0)
        others = ts[:zero_slot] + ts[zero_slot + 1:]
        rng.shuffle(others)
        tmap = dict(zip(copies, others))
        for combo in itertools.product(*[list(X.support) for X, _ in letters]):
            total = L.ZERO
            for v, (_, c) in zip(combo, letters):
                total = L.add(total, L.matvec(matrix_power(T, tmap[c]), v))
            for m in middle.support:
                checked += 1
                if L.add(total, m) == L.ZERO:
                    return Witness(False, d, checked)
    return Witness(True, d, checked)


# ---------------------------------------------------------------------------
# averaged four-letter correlation W(p) W(T^t m) W(-n) W(-T^t m)


def condition_3_12_average(p: IntVec2, m: IntVec2, n: IntVec2, T: HyperbolicMatrix, theta: ThetaParameter,
                           t_max: int = 10_000):
    """Avg_t phi(W(p) W(T^t m) W(-n) W(-T^t m)).

    The product equals e^{-i pi theta sigma(p,n)} e^{-2 pi i theta sigma(T^t m, n)} W(p - n),
    so the average is [p == n] * Avg_t e^{-2 pi i theta sigma(T^t m, n)}:
    0 for generic theta, the single root of unity e^{2 pi i beta_r K(n, m)} at a special
    theta, an exact periodic mean for rational theta and a truncated mean otherwise.
    """
    m, n, p = L.vec(m), L.vec(n), L.vec(p)
    if m == L.ZERO or n == L.ZERO:
        raise ValueError("m and n must be nonzero")
    if p != n:
        return ZERO
    if isinstance(theta, Zero):
        return ONE
    if isinstance(theta, GenericIrrational):
        return ZERO
    if isinstance(theta, SpecialQuadratic):
        return Cyclotomic.root(theta.beta_r * asymptotic_form(T, n, m))
    if isinstance(theta, Rational):
        q = theta.value.denominator
        # T mod q is periodic; find the period of the orbit pair
        M = T.rows
        period = None
        cur = tuple(tuple(x % q for x in row) for row in M)
        ident = tuple(tuple(x % q for x in row) for row in L.IDENTITY)
        for k in range(1, 6 * q * q + 10):
            if cur == ident:
                period = k
                break
            cur = tuple(tuple(x % q for x in row) for row in L.matmul(cur, M))
        acc = ZERO
        for t in range(period):
            acc = acc + Cyclotomic.root(-theta.value * symplectic(T.apply(m, t), n))
        return acc * Fraction(1, period)
    vals = equidistribution_sums(n, m, T, theta, t_max, harmonics=1)
    return mpmath.mpc(vals[0])


# ---------------------------------------------------------------------------
# Weyl sums along orbits


def orbit_phases(m: IntVec2, n: IntVec2, T: HyperbolicMatrix, theta: ThetaParameter, N: int, k: int = 1) -> np.ndarray:
    """frac(k theta sigma(m, T^t n)) for t = 1..N as float64, exact up to 2^-60."""
    s0 = symplectic(m, n)
    s1 = symplectic(m, L.matvec(T.rows, n))
    beta = T.beta1
    out = np.empty(N)
    if isinstance(theta, Zero) or (s0 == 0 and s1 == 0):
        out[:] = 0.0
        return out
    if isinstance(theta, Rational):
        q = theta.value.denominator
        a = theta.value.numerator * k
        prev, cur = (a * s0) % q, (a * s1) % q
        for t in range(N):
            out[t] = cur / q
            prev, cur = cur, (beta * cur - prev) % q
        return out
    lam_bits = int(float(mpmath.log(T.lam.to_mpf(64), 2)) * (N + 2)) + 1
    bits = lam_bits + max(abs(s0), abs(s1)).bit_length() + k.bit_length() + 72
    mod = 1 << bits
    Theta = theta.fixed_point(bits) * k
    prev, cur = (Theta * s0) % mod, (Theta * s1) % mod
    shift = bits - 53
    scale = float(1 << 53)
    for t in range(N):
        out[t] = (cur >> shift) / scale
        prev, cur = cur, (beta * cur - prev) % mod
    return out


def equidistribution_sums(m: IntVec2, n: IntVec2, T: HyperbolicMatrix, theta: ThetaParameter, N: int,
                          harmonics: int = 1, sign: int = 1) -> List[complex]:
    """(1/N) sum_{t=1}^N e^{2 pi i k theta sigma(m, T^t n)} for k = 1..harmonics."""
    out = []
    for k in range(1, harmonics + 1):
        ph = orbit_phases(m, n, T, theta, N, k)
        out.append(complex(np.exp(2j * np.pi * sign * ph).mean()))
    return out


@dataclass
class EquidistributionReport:
    N: int
    harmonics: int
    sums: List[List[complex]]  # per theta sample, per harmonic
    thetas: List[str]

    def mean_square(self, k: int = 1) -> float:
        return float(np.mean([abs(s[k - 1]) ** 2 for s in self.sums]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# nc-torus-lab v1\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample", "k", "value_re", "value_im", "abs_value"])
        for i, row in enumerate(self.sums):
            for k, z in enumerate(row, start=1):
                w.writerow([i, k, repr(z.real), repr(z.imag), repr(abs(z))])
        return buf.getvalue()


def equidistribution_test(m: IntVec2, n: IntVec2, T: HyperbolicMatrix, thetas: Sequence[ThetaParameter], N: int,
                          harmonics: int = 1) -> EquidistributionReport:
    sums = [equidistribution_sums(m, n, T, th, N, harmonics) for th in thetas]
    return EquidistributionReport(N, harmonics, sums, [str(th.to_json()) for th in thetas])


def random_thetas(count: int, seed: int) -> List[ExplicitReal]:
    rng = random.Random(seed)
    return [ExplicitReal.random(rng.getrandbits(63)) for _ in range(count)]
