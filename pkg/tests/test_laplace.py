import math
from fractions import Fraction

import numpy as np
import pytest

from heatfix.laplace import (
    GradedSeries,
    InsufficientJetOrderError,
    PhaseJet,
    PrefactorJet,
    b_polynomials,
    expand,
    normalized_average,
    tilde,
)
from heatfix.poly import Poly
from heatfix.tensor import Bilinear, SymTensor, symmetrize, transform


def _sym_from_random(rng, dim, rank, scale=1.0):
    return symmetrize(scale * rng.normal(size=(dim,) * rank))


def _random_phase(rng, dim=2, top=6, scale=0.5):
    s = {}
    l = rng.normal(size=(dim, dim))
    m = l @ l.T + dim * np.eye(dim)
    s[2] = SymTensor(dim, 2, {(i, j): m[i, j] for i in range(dim) for j in range(i, dim)})
    for k in range(3, top + 1):
        s[k] = _sym_from_random(rng, dim, k, scale)
    return PhaseJet(dim, s)


class TestBPolynomials:
    def test_pure_gaussian(self):
        s2 = SymTensor(2, 2, {(0, 0): Fraction(2), (1, 1): Fraction(2)})
        phase = PhaseJet(2, {2: s2, 3: SymTensor.zero(2, 3), 4: SymTensor.zero(2, 4),
                             5: SymTensor.zero(2, 5), 6: SymTensor.zero(2, 6)})
        series = b_polynomials(phase, PrefactorJet.unit(), 2)
        assert series.coefficient(0) == [(1, ())]
        for k in (1, 2, 3, 4):
            for coeff, tensors in series.coefficient(k):
                assert all(not t.data for t in tensors) or coeff == 0

    def test_insufficient_order_raises(self):
        s2 = SymTensor(2, 2, {(0, 0): Fraction(2), (1, 1): Fraction(2)})
        phase = PhaseJet(2, {2: s2, 3: SymTensor.zero(2, 3)})
        with pytest.raises(InsufficientJetOrderError):
            b_polynomials(phase, PrefactorJet.unit(), 2)

    def test_nd_b1_structure(self):
        # b_1 = -(1/2) S~_4 + (1/8) S~_3 S~_3: check <b_1> against that form
        rng = np.random.default_rng(0)
        phase = _random_phase(rng)
        series = b_polynomials(phase, PrefactorJet.unit(), 1)
        q = Bilinear(np.linalg.inv(phase.s2_matrix().astype(float)).astype(object))
        got = normalized_average(series.coefficient(2), q)
        c4, t4 = tilde(phase.s[4], Fraction(-1, 2))
        c33, t33 = tilde(phase.s[3], Fraction(1, 8))
        expect = normalized_average(
            [(c4, t4), (c33 * tilde(phase.s[3])[0], t33 + (phase.s[3],))], q
        )
        assert got == pytest.approx(expect, rel=1e-12)


class TestExpand:
    def test_pure_quadratic_c0(self):
        m = np.array([[Fraction(4), Fraction(0)], [Fraction(0), Fraction(4)]])
        s2 = SymTensor(2, 2, {(0, 0): m[0, 0], (1, 1): m[1, 1]})
        phase = PhaseJet(2, {k: SymTensor.zero(2, k) for k in range(3, 7)} | {2: s2})
        res = expand(phase, PrefactorJet.unit(), 2)
        assert res.coefficients[0] == Fraction(1, 4)  # sqrt(det Q) = 1/4
        assert res.coefficients[1] == 0
        assert res.coefficients[2] == 0

    def test_rotation_invariance(self):
        rng = np.random.default_rng(42)
        phase = _random_phase(rng)
        res = expand(phase, PrefactorJet.unit(), 2)
        th = 0.6180
        r = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        rotated = PhaseJet(2, {k: transform(t, r) for k, t in phase.s.items()})
        res_r = expand(rotated, PrefactorJet.unit(), 2)
        for a, b in zip(res.coefficients, res_r.coefficients):
            assert float(a) == pytest.approx(float(b), rel=1e-10, abs=1e-12)
