"""Generic generalized-Laplace expansion engine.

Given the Taylor data of a phase S at a non-degenerate minimum (S0 = S1 = 0,
S2 positive definite) and a graded prefactor, the integrand's non-Gaussian
tail exp(-sum_k t^{k/2} h_k) * prefactor is expanded as a power series in
t^{1/2} whose coefficients b_k are polynomials in z, then integrated against
the Gaussian weight e^{-(1/4) S_ab z^a z^b}.  Odd-parity coefficients vanish
under the average, leaving integer powers of t only.

A z-polynomial is held as a sum of monomials c * prod_i T~_i where
T~ = (1/r!) T_{u1..ur} z^{u1}..z^{ur} for a symmetric tensor T; products never
expand the symmetrized tensor product explicitly.  The Gaussian average of a
monomial routes through the contraction-graph machinery:

    < c * T~_1 ... T~_m > = c * prod_i (1/r_i!) * (2N)!/N! * tau^N(T_1 v ... v T_m)

with 2N the total rank and Q = S2^{-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import wick
from .gauss import exact_det, _chol_or_raise
from .tensor import Bilinear, SymTensor, _exact_value


class InsufficientJetOrderError(ValueError):
    pass


def tilde(tensor: SymTensor, coeff=1):
    """Monomial (coeff/r!) T z^r as an engine term."""
    c = Fraction(coeff, math.factorial(tensor.rank)) if _exactish_scalar(coeff) else coeff / math.factorial(tensor.rank)
    return (c, (tensor,))


def _exactish_scalar(v) -> bool:
    return isinstance(v, (int, Fraction)) or _exact_value(v)


class GradedSeries:
    """Power series in t^{1/2}: {half-power m: list of (coeff, tensors)}."""

    def __init__(self, terms: dict | None = None):
        self.terms = {m: list(ts) for m, ts in (terms or {}).items() if ts}

    @classmethod
    def one(cls) -> "GradedSeries":
        return cls({0: [(1, ())]})

    def add_term(self, halfpow: int, coeff, tensors=()):
        ranks = sum(t.rank for t in tensors)
        if ranks % 2 != halfpow % 2:
            raise ValueError("grading violation: t^{m/2} term needs z-parity m")
        self.terms.setdefault(halfpow, []).append((coeff, tuple(tensors)))

    def __add__(self, other: "GradedSeries") -> "GradedSeries":
        out = GradedSeries(self.terms)
        for m, ts in other.terms.items():
            out.terms.setdefault(m, []).extend(ts)
        return out

    def scale(self, c) -> "GradedSeries":
        return GradedSeries(
            {m: [(c * cf, tens) for cf, tens in ts] for m, ts in self.terms.items()}
        )

    def mul(self, other: "GradedSeries", cut: int) -> "GradedSeries":
        out: dict = {}
        for m1, ts1 in self.terms.items():
            if m1 > cut:
                continue
            for m2, ts2 in other.terms.items():
                m = m1 + m2
                if m > cut:
                    continue
                bucket = out.setdefault(m, {})
                for c1, t1 in ts1:
                    for c2, t2 in ts2:
                        prod = tuple(sorted(t1 + t2, key=id))
                        key = tuple(id(t) for t in prod)
                        if key in bucket:
                            prev_c, prev_t = bucket[key]
                            bucket[key] = (prev_c + c1 * c2, prev_t)
                        else:
                            bucket[key] = (c1 * c2, prod)
        return GradedSeries(
            {m: [v for v in bucket.values()] for m, bucket in out.items()}
        )

    def exp_negative(self, cut: int) -> "GradedSeries":
        """exp(-self) truncated; requires min half-power >= 1."""
        if any(m < 1 and ts for m, ts in self.terms.items()):
            raise ValueError("exp tail must start at half-power 1")
        out = GradedSeries.one()
        power = GradedSeries.one()
        sign = 1
        for j in range(1, cut + 1):
            power = power.mul(self, cut)
            if not power.terms:
                break
            sign = -sign
            out = out + power.scale(Fraction(sign, math.factorial(j)))
        return out

    def coefficient(self, halfpow: int):
        return self.terms.get(halfpow, [])


@dataclass
class PhaseJet:
    """Symmetrized derivatives S_k (k = 2..order) of the phase at the minimum."""

    dim: int
    s: dict  # {k: SymTensor rank k}
    order: int = field(init=False)

    def __post_init__(self):
        if 2 not in self.s:
            raise ValueError("PhaseJet needs S_2")
        for k, t in self.s.items():
            if t.rank != k or t.dim != self.dim:
                raise ValueError(f"S_{k} has wrong rank or dimension")
        self.order = max(self.s)

    def s2_matrix(self) -> np.ndarray:
        s2 = self.s[2]
        m = np.empty((self.dim, self.dim), dtype=object)
        for i in range(self.dim):
            for j in range(self.dim):
                m[i, j] = s2[(i, j)]
        return m

    def tail(self, cut: int) -> GradedSeries:
        """Exponent tail sum_{k>=1} t^{k/2} (1/2) S~_{k+2}."""
        out = GradedSeries()
        for k in range(1, cut + 1):
            t = self.s.get(k + 2)
            if t is not None:
                c, tens = tilde(t, 1)
                out.add_term(k, _half(c), tens)
        return out


def _half(c):
    return c * Fraction(1, 2) if _exactish_scalar(c) else c / 2


@dataclass
class PrefactorJet:
    """Graded auxiliary factor multiplying the pure-Gaussian exponential."""

    series: GradedSeries

    @classmethod
    def unit(cls) -> "PrefactorJet":
        return cls(GradedSeries.one())


@dataclass
class ExpansionResult:
    coefficients: list
    leading_power: Fraction


def b_polynomials(phase: PhaseJet, pre: PrefactorJet, order: int) -> GradedSeries:
    """Expansion B ~ sum_k b_k t^k + t^{1/2} sum_k b~_k t^k as a graded series.

    Needs S up to order 2*order + 2; raises otherwise.
    """
    cut = 2 * order
    need = 2 * order + 2
    if phase.order < need and order > 0:
        raise InsufficientJetOrderError(
            f"order-{order} coefficients need S up to order {need}, have {phase.order}"
        )
    tail = phase.tail(cut)
    return tail.exp_negative(cut).mul(pre.series, cut)


def normalized_average(terms, q: Bilinear):
    """< sum of engine monomials > with <1> = 1 and <z z> = 2Q."""
    acc = 0
    graphs_cache: dict = {}
    for coeff, tensors in terms:
        positive = [t for t in tensors if t.rank > 0]
        total = sum(t.rank for t in positive)
        if total % 2 == 1:
            continue
        norm = Fraction(math.factorial(total), math.factorial(total // 2))
        key = tuple(t.rank for t in positive)
        if key not in graphs_cache and total > 0:
            graphs_cache[key] = wick.enumerate_graphs(key)
        val = wick.evaluate_contraction(
            list(tensors), q, graphs=graphs_cache.get(key)
        )
        acc = acc + coeff * norm * val
    return acc


def expand(phase: PhaseJet, pre: PrefactorJet, order: int) -> ExpansionResult:
    """Integer-power coefficients c_k = sqrt(det Q) <b_2k>, k = 0..order.

    This is the zero-dimensional (point) normalization in which the overall
    (4 pi t)^{-n/2} heat-kernel weight produces c_0 = sqrt(det Q) for a pure
    quadratic phase.
    """
    m = phase.s2_matrix()
    exact = all(_exact_value(v) for v in m.flat)
    _chol_or_raise(m)
    if exact:
        from .gauss import exact_inverse

        qm = exact_inverse(m)
        detq = Fraction(1) / exact_det(m)
        sqrt_detq = _exact_sqrt(detq)
    else:
        qm = np.linalg.inv(m.astype(float))
        sqrt_detq = 1.0 / math.sqrt(float(np.linalg.det(m.astype(float))))
    q = Bilinear(qm if exact else qm.astype(object))
    series = b_polynomials(phase, pre, order)
    coeffs = []
    for k in range(order + 1):
        avg = normalized_average(series.coefficient(2 * k), q)
        coeffs.append(sqrt_detq * avg)
    return ExpansionResult(coefficients=coeffs, leading_power=Fraction(0))


def _exact_sqrt(x: Fraction):
    num, den = x.numerator, x.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return math.sqrt(num / den)
