"""Integer lattice helpers: vectors in Z^2, 2x2 integer matrices, the symplectic form."""

from __future__ import annotations

from typing import Iterable, Tuple

IntVec2 = Tuple[int, int]
IntMat2 = Tuple[Tuple[int, int], Tuple[int, int]]

ZERO: IntVec2 = (0, 0)
IDENTITY: IntMat2 = ((1, 0), (0, 1))


def vec(m: Iterable[int]) -> IntVec2:
    m1, m2 = m
    if isinstance(m1, bool) or isinstance(m2, bool):
        raise TypeError("lattice components must be integers")
    return (int(m1), int(m2))


def symplectic(m: IntVec2, n: IntVec2) -> int:
    """m1*n2 - m2*n1."""
    return m[0] * n[1] - m[1] * n[0]


def add(m: IntVec2, n: IntVec2) -> IntVec2:
    return (m[0] + n[0], m[1] + n[1])


def neg(m: IntVec2) -> IntVec2:
    return (-m[0], -m[1])


def scale(k: int, m: IntVec2) -> IntVec2:
    return (k * m[0], k * m[1])


def vsum(vectors: Iterable[IntVec2]) -> IntVec2:
    s1 = s2 = 0
    for v in vectors:
        s1 += v[0]
        s2 += v[1]
    return (s1, s2)


def matvec(M: IntMat2, v: IntVec2) -> IntVec2:
    return (M[0][0] * v[0] + M[0][1] * v[1], M[1][0] * v[0] + M[1][1] * v[1])


def matmul(A: IntMat2, B: IntMat2) -> IntMat2:
    return (
        (A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
        (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]),
    )


def transpose(A: IntMat2) -> IntMat2:
    return ((A[0][0], A[1][0]), (A[0][1], A[1][1]))


def adjugate(A: IntMat2) -> IntMat2:
    # equals the inverse when det A = 1
    return ((A[1][1], -A[0][1]), (-A[1][0], A[0][0]))


def bilinear(m: IntVec2, S: IntMat2, n: IntVec2) -> int:
    """<m, S n>."""
    return m[0] * (S[0][0] * n[0] + S[0][1] * n[1]) + m[1] * (S[1][0] * n[0] + S[1][1] * n[1])
