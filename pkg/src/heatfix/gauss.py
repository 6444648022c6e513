"""Closed-form Gaussian integrals and the normalized Gaussian average.

Conventions: the canonical weight is exp(-x^T A x) with A symmetric positive
definite and G = A^{-1}.  Even moments reduce to pairing sums (Isserlis) over
the covariance G/2; the normalized average used by the expansion pipelines
carries weight exp(-(1/4) S_ab z^a z^b), i.e. covariance 2Q with Q = S^{-1},
so <z^a z^b> = 2 Q^{ab} and <1> = 1.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .tensor import Bilinear, SymTensor, _exact_value


class NotPositiveDefiniteError(ValueError):
    pass


def _chol_or_raise(a: np.ndarray):
    try:
        return np.linalg.cholesky(np.asarray(a, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite") from exc


def exact_inverse(m: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse over exact scalars (fraction-free pivoting)."""
    n = m.shape[0]
    a = np.empty((n, 2 * n), dtype=object)
    for i in range(n):
        for j in range(n):
            a[i, j] = Fraction(m[i, j]) if not isinstance(m[i, j], Fraction) else m[i, j]
        for j in range(n):
            a[i, n + j] = Fraction(1) if i == j else Fraction(0)
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r, col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
        p = a[col, col]
        for j in range(2 * n):
            a[col, j] = a[col, j] / p
        for r in range(n):
            if r != col and a[r, col] != 0:
                f = a[r, col]
                for j in range(2 * n):
                    a[r, j] = a[r, j] - f * a[col, j]
    return a[:, n:].copy()


def exact_det(m: np.ndarray):
    """Bareiss fraction-free determinant over exact scalars."""
    n = m.shape[0]
    a = [[Fraction(m[i, j]) for j in range(n)] for i in range(n)]
    sign = 1
    prev = Fraction(1)
    for col in range(n - 1):
        if a[col][col] == 0:
            piv = next((r for r in range(col + 1, n) if a[r][col] != 0), None)
            if piv is None:
                return Fraction(0)
            a[col], a[piv] = a[piv], a[col]
            sign = -sign
        for r in range(col + 1, n):
            for c in range(col + 1, n):
                a[r][c] = (a[r][c] * a[col][col] - a[r][col] * a[col][c]) / prev
        prev = a[col][col]
    return sign * a[n - 1][n - 1]


class GaussianWeight:
    """Weight exp(-x^T A x); construction checks positive definiteness."""

    def __init__(self, precision):
        a = np.asarray(precision)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("precision must be a square matrix")
        if not np.allclose(a.astype(float), a.astype(float).T, rtol=1e-12, atol=1e-14):
            raise ValueError("precision must be symmetric")
        self.dim = a.shape[0]
        self.precision = a
        self._chol = _chol_or_raise(a)
        exact = all(_exact_value(v) for v in a.flat) if a.dtype == object else False
        self.covariance_like = exact_inverse(a) if exact else np.linalg.inv(a.astype(float))
        self.log_normalizer = (
            0.5 * self.dim * math.log(math.pi)
            - float(sum(np.log(np.diag(self._chol))))
        )


class MomentTable:
    """Memoized Isserlis pairing sums for one covariance matrix C.

    moment(slots) = E[x_{i1} ... x_{i2k}] for a centered Gaussian with
    covariance C; exact when C has exact entries.
    """

    def __init__(self, covariance):
        self.cov = covariance
        self._memo = {(): 1}

    def moment(self, slots) -> object:
        slots = tuple(sorted(slots))
        if len(slots) % 2 != 0:
            return 0
        memo = self._memo
        if slots in memo:
            return memo[slots]
        acc = 0
        first = slots[0]
        rest = slots[1:]
        for j in range(len(rest)):
            if j > 0 and rest[j] == rest[j - 1]:
                continue  # identical partner value: same term, count once per distinct slot value
            # pair `first` with every occurrence of rest[j] exactly once each;
            # occurrences are interchangeable, so weight by their count
            acc = acc + rest.count(rest[j]) * self.cov[first, rest[j]] * self.moment(
                rest[:j] + rest[j + 1 :]
            )
        memo[slots] = acc
        return acc


def moment_1d(a, p: int) -> float:
    """integral over R of e^{-a x^2} x^p dx."""
    if a <= 0:
        raise NotPositiveDefiniteError("need a > 0")
    if p < 0:
        raise ValueError("p must be non-negative")
    if p % 2 == 1:
        return 0.0
    k = p // 2
    return math.sqrt(math.pi) * moment_1d_rational(Fraction(1), p) * float(a) ** (-0.5 - k)


def moment_1d_rational(a, p: int):
    """moment_1d divided by sqrt(pi) a^{-1/2}, exact: (2k)!/(k! 4^k) a^{-k}."""
    if p % 2 == 1:
        return Fraction(0)
    k = p // 2
    return Fraction(math.factorial(2 * k), math.factorial(k) * 4**k) * Fraction(a) ** (-k)


def _degree_slots(degree) -> tuple:
    slots = []
    for coord, exp in enumerate(degree):
        slots.extend([coord] * exp)
    return tuple(slots)


def moment_nd(g, degree) -> float:
    """integral over R^n of e^{-x^T A x} x^degree dx, with G = A^{-1} given.

    degree is the per-coordinate exponent tuple.  Odd total degree gives 0.
    """
    g = np.asarray(g)
    n = g.shape[0]
    a = np.linalg.inv(g.astype(float))
    _chol_or_raise(a)
    slots = _degree_slots(degree)
    if len(slots) % 2 == 1:
        return 0.0
    table = MomentTable(g.astype(float) / 2.0)
    detg = float(np.linalg.det(g.astype(float)))
    return math.pi ** (n / 2) * math.sqrt(detg) * float(table.moment(slots))


def moment_nd_rational(g, degree):
    """moment_nd divided by pi^{n/2} sqrt(det G), exact for exact G."""
    g = np.asarray(g)
    slots = _degree_slots(degree)
    if len(slots) % 2 == 1:
        return Fraction(0)
    half = np.empty(g.shape, dtype=object)
    for i in range(g.shape[0]):
        for j in range(g.shape[1]):
            half[i, j] = Fraction(g[i, j]) / 2
    return MomentTable(half).moment(slots)


def average_covariance(s2: SymTensor | np.ndarray):
    """Covariance 2Q of the normalized average with weight e^{-(1/4) S z z}."""
    if isinstance(s2, SymTensor):
        if s2.rank != 2:
            raise ValueError("S must have rank 2")
        m = np.empty((s2.dim, s2.dim), dtype=object)
        for i in range(s2.dim):
            for j in range(s2.dim):
                m[i, j] = s2[(i, j)]
    else:
        m = np.asarray(s2)
    exact = m.dtype == object and all(_exact_value(v) for v in m.flat)
    _chol_or_raise(m)
    q = exact_inverse(m) if exact else np.linalg.inv(m.astype(float))
    return 2 * q if exact else 2.0 * q


def gaussian_average(poly, s2) -> object:
    """Normalized average < sum_i c_i z^{deg_i} > with weight e^{-(1/4) S z z}.

    `poly` is a list of (coefficient, degree-tuple) pairs; <1> = 1 and
    <z^a z^b> = 2 Q^{ab} with Q = S^{-1}.
    """
    cov = average_covariance(s2)
    table = MomentTable(cov)
    acc = 0
    for coeff, degree in poly:
        acc = acc + coeff * table.moment(_degree_slots(degree))
    return acc
