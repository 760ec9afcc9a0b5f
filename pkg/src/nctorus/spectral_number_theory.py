"""Integer and quadratic-field data attached to a hyperbolic toral automorphism T.

T = [[a, b], [c, d]] with det 1 and trace beta(1) = a + d > 2 has eigenvalues
lambda > 1 and 1/lambda in Q(sqrt(D)), D = beta(1)^2 - 4. Everything here is exact:
lattice orbits T^t n are integer vectors, and the symplectic pairing of an
orbit splits as  sigma(m, T^t n) = A lambda^t + B lambda^-t  with A, B in Q(sqrt(D)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import lattice as L
from .lattice import IntMat2, IntVec2
from .quadratic import QuadraticNumber
from .theta import (
    ExplicitReal,
    GenericIrrational,
    Rational,
    SpecialQuadratic,
    ThetaParameter,
    Zero,
)
from .scalars import SymbolicPhaseError


class InvalidMatrix(ValueError):
    pass


class InvalidResidue(ValueError):
    def __init__(self, r: int, beta1: int):
        super().__init__(f"invalid residue index r={r}: need 0 <= r <= {beta1 - 3}")


@dataclass(frozen=True)
class HyperbolicMatrix:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for x in (self.a, self.b, self.c, self.d):
            if isinstance(x, bool) or not isinstance(x, int):
                raise InvalidMatrix("matrix entries must be integers")
        if self.a * self.d - self.b * self.c != 1:
            raise InvalidMatrix(f"det must be 1, got {self.a * self.d - self.b * self.c}")
        if self.a + self.d <= 2:
            raise InvalidMatrix(f"trace must exceed 2, got {self.a + self.d}")
        if self.b == 0:
            # eigenvector components carry a 1/b; lower-triangular T is not covered
            raise InvalidMatrix("b = 0 is not supported")

    @classmethod
    def from_rows(cls, rows) -> "HyperbolicMatrix":
        (a, b), (c, d) = rows
        return cls(int(a), int(b), int(c), int(d))

    @property
    def rows(self) -> IntMat2:
        return ((self.a, self.b), (self.c, self.d))

    @property
    def beta1(self) -> int:
        return self.a + self.d

    @property
    def disc(self) -> int:
        return self.beta1 ** 2 - 4

    @property
    def lam(self) -> QuadraticNumber:
        return QuadraticNumber(Fraction(self.beta1, 2), Fraction(1, 2), self.disc)

    @property
    def lam_inv(self) -> QuadraticNumber:
        return self.lam.conj()

    @property
    def eigenvectors(self) -> Tuple[Tuple[QuadraticNumber, QuadraticNumber], ...]:
        """(b, lambda - a) for lambda and for 1/lambda."""
        lam = self.lam
        D = self.disc
        return (
            (QuadraticNumber.rational(self.b, D), lam - self.a),
            (QuadraticNumber.rational(self.b, D), lam.conj() - self.a),
        )

    @property
    def s_matrix(self) -> IntMat2:
        return ((-self.c, 1 - self.a), (1 - self.a, -self.b))

    def apply(self, v: IntVec2, t: int = 1) -> IntVec2:
        return L.matvec(matrix_power(self, t), v)

    def to_json(self) -> list:
        return [[self.a, self.b], [self.c, self.d]]


CAT_MAP = HyperbolicMatrix(2, 1, 1, 1)
T4 = HyperbolicMatrix(3, 1, 2, 1)


def trace_family(beta1: int) -> HyperbolicMatrix:
    """[[k-1, 1], [k-2, 1]]: a hyperbolic matrix of trace k >= 3 (k = 3 is the cat map)."""
    return HyperbolicMatrix(beta1 - 1, 1, beta1 - 2, 1)


def _mpow(M: IntMat2, t: int) -> IntMat2:
    result = L.IDENTITY
    while t:
        if t & 1:
            result = L.matmul(result, M)
        M = L.matmul(M, M)
        t >>= 1
    return result


def matrix_power(T: HyperbolicMatrix, t: int) -> IntMat2:
    if t >= 0:
        return _mpow(T.rows, t)
    return _mpow(L.adjugate(T.rows), -t)


@dataclass
class TraceSequence:
    """beta(t) = Tr T^t and gamma(t) (gamma(0)=1, gamma(1)=beta(1)), same recursion.

    Tables are filled eagerly by ``build`` and only read afterwards.
    """

    beta1: int
    _beta: List[int] = field(default_factory=list)
    _gamma: List[int] = field(default_factory=list)

    def __post_init__(self):
        self._beta = [2, self.beta1]
        self._gamma = [1, self.beta1]

    @classmethod
    def of(cls, T: HyperbolicMatrix, upto: int = 0) -> "TraceSequence":
        seq = cls(T.beta1)
        seq.build(upto)
        return seq

    def build(self, upto: int) -> "TraceSequence":
        b1 = self.beta1
        while len(self._beta) <= upto:
            self._beta.append(b1 * self._beta[-1] - self._beta[-2])
            self._gamma.append(b1 * self._gamma[-1] - self._gamma[-2])
        return self

    def beta(self, t: int) -> int:
        if t < 0:
            return self.beta(-t)  # Tr T^-t = Tr T^t for det 1
        self.build(t)
        return self._beta[t]

    def gamma(self, t: int) -> int:
        if t < 0:
            raise ValueError("gamma is defined for t >= 0")
        self.build(t)
        return self._gamma[t]


def delta_form(T: HyperbolicMatrix, m: IntVec2, n: IntVec2) -> int:
    """(1-a)(m1 n2 + n1 m2) - c m1 n1 - b m2 n2."""
    return (1 - T.a) * (m[0] * n[1] + n[0] * m[1]) - T.c * m[0] * n[0] - T.b * m[1] * n[1]


def _delta_one(T: HyperbolicMatrix, m: IntVec2, n: IntVec2) -> int:
    return T.a * (m[0] * n[1] + n[0] * m[1]) + T.c * m[0] * n[0] + T.b * m[1] * n[1]


def asymptotic_form(T: HyperbolicMatrix, m: IntVec2, n: IntVec2) -> int:
    """K(m, n) = sigma(m, (T - 1) n).

    At a special theta, theta*sigma(m, T^t n) mod 1 tends to beta_r*K(m, n) as t -> +oo.
    K agrees with the Delta-form modulo beta(1) - 2 up to the term 2 c m1 n1.
    """
    Tn = L.matvec(T.rows, n)
    return L.symplectic(m, (Tn[0] - n[0], Tn[1] - n[1]))


def beta_r(T: HyperbolicMatrix, r: int) -> Fraction:
    if T.beta1 < 3 or not (0 <= r <= T.beta1 - 3):
        raise InvalidResidue(r, T.beta1)
    return Fraction(r, T.beta1 - 2)


def special_theta(T: HyperbolicMatrix, ell: int, r: int) -> SpecialQuadratic:
    br = beta_r(T, r)
    lam = T.lam
    value = (lam * ell + (lam - 1) * br).mod1()
    return SpecialQuadratic(ell=ell, r=r, value=value, beta_r=br, matrix=T.rows)


def congruence_check(T: HyperbolicMatrix) -> Tuple[bool, IntMat2]:
    """T^(beta(1)-2) == identity modulo beta(1) - 2; returns the verdict and T^(beta(1)-2)."""
    k = T.beta1 - 2
    W = matrix_power(T, k)
    ok = all((W[i][j] - (1 if i == j else 0)) % k == 0 for i in range(2) for j in range(2))
    return ok, W


def orbit_coefficients(T: HyperbolicMatrix, m: IntVec2, n: IntVec2) -> Tuple[QuadraticNumber, QuadraticNumber]:
    """A, B with sigma(m, T^t n) = A lambda^t + B lambda^-t for every integer t.

    Uses T^t = u_t T - u_{t-1} with u_t = (lambda^t - lambda^-t)/sqrt(D). B is the
    field conjugate of A.
    """
    D = T.disc
    x = L.symplectic(m, L.matvec(T.rows, n))
    y = L.symplectic(m, n)
    lam = T.lam
    root = QuadraticNumber.sqrt_d(D)
    A = (lam.inverse() * (-y) + x) / root
    B = (lam * y - x) / root
    return A, B


def orbit_value(T: HyperbolicMatrix, A: QuadraticNumber, B: QuadraticNumber, t: int) -> QuadraticNumber:
    lam = T.lam
    return A * lam ** t + B * lam ** (-t)


def limit_q(T: HyperbolicMatrix, r: int, m: IntVec2, n: IntVec2, direction: int = 1) -> Fraction:
    """lim_{t -> +/-oo} theta*sigma(m, T^t n) mod 1 at a special theta with residue r.

    direction +1: beta_r * K(m, n);  direction -1: -beta_r * K(n, m).
    """
    br = beta_r(T, r)
    if direction > 0:
        return (br * asymptotic_form(T, m, n)) % 1
    if direction < 0:
        return (-br * asymptotic_form(T, n, m)) % 1
    raise ValueError("direction must be +1 or -1")


def delta_limit(T: HyperbolicMatrix, r: int, m: IntVec2, n: IntVec2, direction: int = 1) -> Fraction:
    """+/- beta_r * Delta(m, n) mod 1; equals ``limit_q`` whenever c == 0 mod (beta(1) - 2)."""
    br = beta_r(T, r)
    return (direction * br * delta_form(T, m, n)) % 1


# ---------------------------------------------------------------------------
# identities between beta, gamma and lambda


def beta_via_gamma(T: HyperbolicMatrix, t: int, seq: Optional[TraceSequence] = None) -> QuadraticNumber:
    """(lambda^2 - 1) gamma(t-2) + lambda^-t (1 + lambda^2), which equals beta(t) for t >= 2."""
    seq = seq or TraceSequence.of(T, t)
    lam = T.lam
    return (lam * lam - 1) * seq.gamma(t - 2) + lam ** (-t) * (lam * lam + 1)


def lambda_inverse_power_via_gamma(T: HyperbolicMatrix, t: int, seq: Optional[TraceSequence] = None) -> QuadraticNumber:
    """gamma(t) - lambda*gamma(t-1), which equals lambda^-t for t >= 1."""
    seq = seq or TraceSequence.of(T, t)
    return T.lam * (-seq.gamma(t - 1)) + seq.gamma(t)


def gamma_partial_sum(T: HyperbolicMatrix, t: int, seq: Optional[TraceSequence] = None) -> int:
    seq = seq or TraceSequence.of(T, t)
    return sum(seq.gamma(k) for k in range(t - 1))


def gamma_partial_sum_closed_form(T: HyperbolicMatrix, t: int) -> QuadraticNumber:
    """Closed form of sum_{k=0}^{t-2} gamma(k):
    (lambda^(t+1) + lambda^(2-t)) / ((lambda^2 - 1)(lambda - 1)) - lambda/(lambda - 1)^2."""
    lam = T.lam
    return (lam ** (t + 1) + lam ** (2 - t)) / ((lam * lam - 1) * (lam - 1)) - lam / ((lam - 1) * (lam - 1))


def gamma_step_identity(T: HyperbolicMatrix, t: int, seq: Optional[TraceSequence] = None) -> bool:
    """gamma(t-1) == gamma(t-2) + 1 + (beta(1) - 2) * sum_{k<=t-2} gamma(k)."""
    seq = seq or TraceSequence.of(T, t)
    return seq.gamma(t - 1) == seq.gamma(t - 2) + 1 + (T.beta1 - 2) * gamma_partial_sum(T, t, seq)


# ---------------------------------------------------------------------------
# convergence of theta*beta(t)/(lambda^2 - 1) mod 1


def _circular_distance(x: Fraction, y: Fraction) -> Fraction:
    d = (x - y) % 1
    return min(d, 1 - d)


def verify_beta_limit(
    T: HyperbolicMatrix,
    theta: ThetaParameter,
    t_max: int,
    precision: int = 128,
    target: Optional[Fraction] = None,
) -> List[Fraction]:
    """Residuals dist(frac(theta*beta(t)/(lambda^2-1)), target) for t = 1..t_max.

    Distances are measured on the circle R/Z. Each residual is exact up to
    2**-precision: special and rational theta are handled in exact arithmetic,
    explicit reals through a fixed-point approximation carrying enough bits to
    absorb the growth of beta(t). A source that cannot supply those bits raises
    ``PrecisionExhausted``.
    """
    if isinstance(theta, GenericIrrational):
        raise SymbolicPhaseError("verify_beta_limit needs a numeric theta")
    if target is None:
        target = theta.beta_r if isinstance(theta, SpecialQuadratic) else Fraction(0)
    seq = TraceSequence.of(T, t_max)
    lam = T.lam
    scale = (lam * lam - 1).inverse()
    out = []
    for t in range(1, t_max + 1):
        bt = seq.beta(t)
        if isinstance(theta, Zero):
            x = QuadraticNumber.rational(0, T.disc)
        elif isinstance(theta, Rational):
            x = scale * (theta.value * bt)
        elif isinstance(theta, SpecialQuadratic):
            x = scale * theta.value * bt
        else:
            extra = bt.bit_length() + 8
            x = scale * (theta.approx(precision + extra) * bt)
        out.append(_circular_distance(x.frac(precision + 8), target))
    return out
