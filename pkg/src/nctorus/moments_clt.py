"""Pair partitions, crossing counts and moments of local fluctuations.

F_N(X) = N^{-1/2} sum_{i=1}^N X_i  (X_i the copy of X with index i). Its moments
under phi_inf are finite sums over copy patterns; as N -> oo only pair patterns
survive, and which pairings contribute decides between Gaussian (all pairings),
semicircle (non-crossing pairings) and the intermediate laws.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import mpmath

from . import lattice as L
from .free_product_state import Evaluator, FreeLetter, FreeWord, SpecialEvaluator, configured_budget, BudgetExceeded
from .scalars import ONE, ZERO, Cyclotomic, Scalar, ThetaSeries, sadd, smul, to_mpc
from .spectral_number_theory import HyperbolicMatrix, beta_r
from .theta import ExplicitReal, GenericIrrational, Rational, SpecialQuadratic, ThetaParameter, Zero
from .weyl_algebra import WeylObservable, scalar_parts, trace_state

DEFAULT_MAX_PAIRS = 8


class NotCentred(ValueError):
    pass


@dataclass(frozen=True)
class PairPartition:
    """Pairs (alpha, beta), alpha < beta, covering {1..2n}, sorted by alpha."""

    pairs: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple(sorted((min(a, b), max(a, b)) for a, b in self.pairs))
        points = sorted(x for p in pairs for x in p)
        if points != list(range(1, 2 * len(pairs) + 1)):
            raise ValueError(f"not a pair partition of 1..{2 * len(pairs)}: {pairs}")
        object.__setattr__(self, "pairs", pairs)

    @property
    def n(self) -> int:
        return len(self.pairs)

    def labels(self, assignment: Optional[Sequence[int]] = None) -> Tuple[int, ...]:
        """Copy index of every point; pair k gets ``assignment[k]`` (default k+1)."""
        assignment = assignment or range(1, self.n + 1)
        out = [0] * (2 * self.n)
        for (a, b), c in zip(self.pairs, assignment):
            out[a - 1] = out[b - 1] = c
        return tuple(out)


def enumerate_pair_partitions(n: int, bound: int = DEFAULT_MAX_PAIRS) -> Iterator[PairPartition]:
    """All (2n-1)!! pair partitions of {1..2n}, lexicographic in (alpha_1, beta_1, alpha_2, ...)."""
    if n > bound:
        raise ValueError(f"pair partition bound exceeded: n={n} > {bound}")

    def rec(rest: Tuple[int, ...]):
        if not rest:
            yield ()
            return
        a = rest[0]
        for k in range(1, len(rest)):
            b = rest[k]
            for tail in rec(rest[1:k] + rest[k + 1:]):
                yield ((a, b),) + tail

    for pairs in rec(tuple(range(1, 2 * n + 1))):
        yield PairPartition(pairs)


def crossing_count(nu: PairPartition) -> int:
    c = 0
    for (a1, b1), (a2, b2) in itertools.combinations(nu.pairs, 2):
        if a1 < a2 < b1 < b2 or a2 < a1 < b2 < b1:
            c += 1
    return c


def double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def q_moment(q, covariances, n: int):
    """sum_nu q^{c(nu)} prod_k cov(alpha_k, beta_k).

    ``covariances`` is a mapping or callable on pairs (alpha, beta); 1 if omitted.
    """
    cov = covariances if callable(covariances) else (lambda a, b: covariances[(a, b)]) if covariances is not None else (lambda a, b: 1)
    total = 0
    for nu in enumerate_pair_partitions(n):
        term = q ** crossing_count(nu)
        for a, b in nu.pairs:
            term = term * cov(a, b)
        total = total + term
    return total


def pair_covariance(X: WeylObservable, Y: WeylObservable) -> Scalar:
    """phi(X Y) = sum_m X(m) Y(-m); the Weyl phase sigma(m, -m) vanishes, so theta drops out."""
    acc = ZERO
    for v, c in X.support.items():
        d = Y.support.get(L.neg(v))
        if d is not None:
            acc = sadd(acc, smul(c, d))
    return acc


def _check_centred(observables: Sequence[WeylObservable]):
    for X in observables:
        if not X.is_centred():
            raise NotCentred("observable is not centred: phi(X) != 0")


def pairing_sum(observables: Sequence[WeylObservable], q=1) -> Scalar:
    """sum_nu q^{c(nu)} prod phi(X^(alpha) X^(beta)); q=1 Gaussian, q=0 non-crossing (free)."""
    _check_centred(observables)
    r = len(observables)
    if r % 2:
        return ZERO
    covs = {}
    for a, b in itertools.combinations(range(1, r + 1), 2):
        covs[(a, b)] = pair_covariance(observables[a - 1], observables[b - 1])
    acc = ZERO
    for nu in enumerate_pair_partitions(r // 2):
        c = crossing_count(nu)
        if q == 0 and c:
            continue
        term = Cyclotomic.rational(Fraction(q) ** c) if not isinstance(q, (mpmath.mpf, float)) else to_mpc(q ** c)
        for a, b in nu.pairs:
            term = smul(term, covs[(a, b)])
        acc = sadd(acc, term)
    return acc


def _word(observables: Sequence[WeylObservable], labels: Sequence[int]) -> FreeWord:
    return FreeWord(tuple(FreeLetter(X, c) for X, c in zip(observables, labels)))


def _add(a, b):
    if isinstance(a, ThetaSeries) or isinstance(b, ThetaSeries):
        a = a if isinstance(a, ThetaSeries) else ThetaSeries.constant(a) if not isinstance(a, int) else ThetaSeries()
        b = b if isinstance(b, ThetaSeries) else ThetaSeries.constant(b)
        return a + b
    if isinstance(a, int) and a == 0:
        return b
    return sadd(a, b)


def _scale(x, f):
    if isinstance(x, ThetaSeries):
        return x * Cyclotomic.rational(f) if isinstance(f, (int, Fraction)) else x * to_mpc(f)
    if isinstance(x, int) and x == 0:
        return ZERO
    if isinstance(f, (int, Fraction)):
        return smul(x, Cyclotomic.rational(f))
    return smul(x, mpmath.mpc(f))


def moment_limit(observables: Sequence[WeylObservable], evaluator: Callable[[FreeWord], object], ordered: bool = False):
    """lim_N phi_inf(F_N(X^(1)) ... F_N(X^(r))) as a sum over pair partitions.

    unordered: (1/n!) sum over pair partitions and all n! assignments of copies to pairs;
    ordered: pair k (sorted by left end) is assigned copy k.
    """
    _check_centred(observables)
    r = len(observables)
    if r % 2:
        return ZERO
    n = r // 2
    acc = 0
    for nu in enumerate_pair_partitions(n):
        if ordered:
            acc = _add(acc, evaluator(_word(observables, nu.labels())))
            continue
        for perm in itertools.permutations(range(1, n + 1)):
            acc = _add(acc, evaluator(_word(observables, nu.labels(perm))))
    if ordered:
        return acc if acc != 0 else ZERO
    return _scale(acc, Fraction(1, math.factorial(n)))


def restricted_growth_strings(r: int, min_block: int = 1) -> Iterator[Tuple[int, ...]]:
    """Set partitions of {0..r-1} as label strings (labels 1, 2, ... in order of first use)."""

    def rec(prefix: List[int], used: int):
        if len(prefix) == r:
            counts = [prefix.count(k) for k in range(1, used + 1)]
            if min(counts, default=min_block) >= min_block:
                yield tuple(prefix)
            return
        for k in range(1, used + 2):
            prefix.append(k)
            yield from rec(prefix, max(used, k))
            prefix.pop()

    yield from rec([], 0)


def finite_N_moment(X: WeylObservable, N: int, r: int, evaluator, budget: Optional[int] = None):
    """phi_inf(F_N(X)^r), exact for symbolic evaluators.

    Index tuples are grouped by the induced set partition of {1..r}; a block of size
    one is an unmatched centred letter and contributes 0. For a permutation-invariant
    evaluator a set partition with s blocks is weighted by N(N-1)...(N-s+1); otherwise
    every relative order of the s labels is evaluated and weighted by C(N, s).
    """
    _check_centred([X])
    budget = configured_budget() if budget is None else budget
    size = len(X.support) ** r * max(1, N) ** (r // 2)
    if size > budget:
        raise BudgetExceeded(size, budget)
    invariant = getattr(evaluator, "permutation_invariant", False)
    acc = 0
    for rgs in restricted_growth_strings(r, min_block=2):
        s = max(rgs)
        if s > N:
            continue
        if invariant:
            val = evaluator(_word([X] * r, rgs))
            acc = _add(acc, _scale(val, math.perm(N, s)))
        else:
            sub = 0
            for perm in itertools.permutations(range(1, s + 1)):
                sub = _add(sub, evaluator(_word([X] * r, [perm[k - 1] for k in rgs])))
            acc = _add(acc, _scale(sub, math.comb(N, s)))
    if isinstance(acc, int):
        return ZERO
    if r % 2 == 0:
        return _scale(acc, Fraction(1, N ** (r // 2)))
    if (acc.is_zero() if isinstance(acc, (ThetaSeries, Cyclotomic)) else acc == 0):
        return acc
    return _scale(acc, mpmath.mpf(N) ** (-mpmath.mpf(r) / 2))


SEMICIRCLE = "Semicircle"
GAUSSIAN = "Gaussian"
PAIR_PARTITION_LAW = "PairPartitionLaw"
UNCLASSIFIED = "Unclassified"


def classify_statistics(T: HyperbolicMatrix, theta: ThetaParameter) -> str:
    if isinstance(theta, GenericIrrational):
        return SEMICIRCLE
    if isinstance(theta, Zero):
        return GAUSSIAN
    if isinstance(theta, SpecialQuadratic):
        return GAUSSIAN if theta.beta_r == 0 else PAIR_PARTITION_LAW
    return UNCLASSIFIED


def reference_moment(law: str, order: int, V) -> Optional[object]:
    if order % 2:
        return 0
    n = order // 2
    if law == GAUSSIAN:
        return double_factorial(2 * n - 1) * V ** n
    if law == SEMICIRCLE:
        return catalan(n) * V ** n
    return None


def _as_scalar(x):
    if isinstance(x, ThetaSeries):
        return x.scalar()
    return x


@dataclass
class MomentReport:
    moments: Dict[int, object]
    law: str
    V: object
    finite: Dict[Tuple[int, int], object] = field(default_factory=dict)  # (N, order) -> value

    def rows(self) -> List[dict]:
        out = []
        for order, val in sorted(self.moments.items()):
            re, im = scalar_parts(_as_scalar(val))
            out.append({"N": "inf", "order": order, "value_re": _fmt(re), "value_im": _fmt(im), "law": self.law,
                        "V": _fmt(scalar_parts(_as_scalar(self.V))[0]),
                        "gaussian_ref": _fmt(reference_moment(GAUSSIAN, order, scalar_parts(_as_scalar(self.V))[0])),
                        "semicircle_ref": _fmt(reference_moment(SEMICIRCLE, order, scalar_parts(_as_scalar(self.V))[0]))})
        for (N, order), val in sorted(self.finite.items()):
            re, im = scalar_parts(_as_scalar(val))
            out.append({"N": N, "order": order, "value_re": _fmt(re), "value_im": _fmt(im), "law": self.law,
                        "V": _fmt(scalar_parts(_as_scalar(self.V))[0]), "gaussian_ref": "", "semicircle_ref": ""})
        return out

    def to_json(self) -> dict:
        return {"law": self.law, "V": _fmt(scalar_parts(_as_scalar(self.V))[0]), "rows": self.rows()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# nc-torus-lab v1\n")
        fields = ["N", "order", "value_re", "value_im", "law", "V", "gaussian_ref", "semicircle_ref"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow(row)
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, Fraction)):
        return str(v)
    return mpmath.nstr(v, 30)


def moment_report(X: WeylObservable, T: HyperbolicMatrix, theta: ThetaParameter, evaluator,
                  orders: Sequence[int] = (2, 4, 6), Ns: Sequence[int] = ()) -> MomentReport:
    V = pair_covariance(X, X)
    law = classify_statistics(T, theta)
    moments = {r: moment_limit([X] * r, evaluator, ordered=getattr(evaluator, "permutation_invariant", False)) for r in orders}
    finite = {(N, r): finite_N_moment(X, N, r, evaluator) for N in Ns for r in orders}
    return MomentReport(moments, law, V, finite)
