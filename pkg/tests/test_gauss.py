import math
from fractions import Fraction

import numpy as np
import pytest

from heatfix.gauss import (
    GaussianWeight,
    MomentTable,
    NotPositiveDefiniteError,
    exact_det,
    exact_inverse,
    gaussian_average,
    moment_1d,
    moment_1d_rational,
    moment_nd,
    moment_nd_rational,
)
from heatfix.tensor import SymTensor


def rand_spd(rng, dim):
    l = rng.normal(size=(dim, dim))
    return l @ l.T + dim * np.eye(dim)


class TestMoment1d:
    def test_lemma_values(self):
        assert moment_1d(1.0, 2) == pytest.approx(math.sqrt(math.pi) / 2)
        assert moment_1d(2.0, 0) == pytest.approx(math.sqrt(math.pi / 2))
        assert moment_1d(1.0, 3) == 0.0

    def test_positivity_check(self):
        with pytest.raises(NotPositiveDefiniteError):
            moment_1d(-1.0, 2)

    def test_quadrature_cross_check(self):
        from scipy.integrate import quad

        for a, p in [(0.7, 4), (2.3, 6), (1.1, 2)]:
            ref, _ = quad(lambda x: math.exp(-a * x * x) * x**p, -30, 30)
            assert moment_1d(a, p) == pytest.approx(ref, rel=1e-10)


class TestMomentNd:
    def test_identity_x1sq(self):
        assert moment_nd(np.eye(2), (2, 0)) == pytest.approx(math.pi / 2)

    def test_odd_degree_zero(self):
        assert moment_nd(np.eye(2), (2, 1)) == 0.0

    def test_separability(self):
        # diagonal A factorizes into 1-D moments
        g = np.diag([1.0, 1.0])
        assert moment_nd(g, (2, 2)) == pytest.approx(
            moment_1d(1.0, 2) * moment_1d(1.0, 2)
        )
        assert moment_nd(g, (2, 2)) == pytest.approx(math.pi / 4)

    def test_exact_diagonal_factorization(self):
        g = np.empty((3, 3), dtype=object)
        g[...] = 0
        avals = [Fraction(2), Fraction(3, 2), Fraction(5)]
        for i, a in enumerate(avals):
            g[i, i] = 1 / a
        degree = (4, 2, 2)
        lhs = moment_nd_rational(g, degree)
        rhs = Fraction(1)
        for a, p in zip(avals, degree):
            rhs *= moment_1d_rational(a, p)
        # both are the moment divided by pi^{n/2} sqrt(det G); sqrt factors agree
        assert lhs == rhs

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(1234)
        for trial in range(3):
            dim = 2 + trial % 2
            a = rand_spd(rng, dim)
            g = np.linalg.inv(a)
            degree = tuple(int(d) for d in rng.integers(0, 3, dim) * 2)
            n = 400_000
            cov = g / 2.0
            x = rng.multivariate_normal(np.zeros(dim), cov, size=n)
            vals = np.prod(x ** np.array(degree), axis=1)
            scale = math.pi ** (dim / 2) * math.sqrt(np.linalg.det(g))
            est = scale * vals.mean()
            err = scale * vals.std(ddof=1) / math.sqrt(n)
            assert abs(moment_nd(g, degree) - est) < 4 * err + 1e-12


class TestGaussianWeight:
    def test_rejects_non_spd(self):
        with pytest.raises(NotPositiveDefiniteError):
            GaussianWeight(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_covariance_inverse(self):
        a = np.array([[2.0, 0.5], [0.5, 1.0]])
        w = GaussianWeight(a)
        assert np.allclose(w.covariance_like @ a, np.eye(2))


class TestGaussianAverage:
    def test_normalized_one(self):
        s2 = SymTensor(2, 2, {(0, 0): Fraction(3), (1, 1): Fraction(5)})
        assert gaussian_average([(Fraction(1), (0, 0))], s2) == Fraction(1)

    def test_second_moment_is_2q(self):
        s2 = SymTensor(2, 2, {(0, 0): Fraction(4), (1, 1): Fraction(2)})
        got = gaussian_average([(Fraction(1), (2, 0))], s2)
        assert got == 2 * Fraction(1, 4)

    def test_odd_vanishes(self):
        s2 = SymTensor(2, 2, {(0, 0): Fraction(1), (1, 1): Fraction(1)})
        assert gaussian_average([(Fraction(1), (1, 0))], s2) == 0

    def test_quadratic_consistency(self):
        # <z^a z^b> S_ab / 2 = dim, since <zz> = 2Q and Q S = I
        rng = np.random.default_rng(5)
        m = rand_spd(rng, 3)
        s2 = SymTensor(3, 2, {(i, j): m[i, j] for i in range(3) for j in range(i, 3)})
        poly = []
        for i in range(3):
            for j in range(3):
                deg = [0, 0, 0]
                deg[i] += 1
                deg[j] += 1
                poly.append((m[i, j] / 2.0, tuple(deg)))
        assert gaussian_average(poly, s2) == pytest.approx(3.0)


class TestExactLinalg:
    def test_inverse_and_det(self):
        m = np.empty((3, 3), dtype=object)
        m[...] = [
            [Fraction(2), Fraction(1), Fraction(0)],
            [Fraction(1), Fraction(3), Fraction(1)],
            [Fraction(0), Fraction(1), Fraction(4)],
        ]
        inv = exact_inverse(m)
        prod = m @ inv
        for i in range(3):
            for j in range(3):
                assert prod[i, j] == (1 if i == j else 0)
        assert exact_det(m) == Fraction(2 * 11 - 1 * 4)  # expand by hand: 2*(12-1)-1*(4-0)

    def test_isserlis_recursion_against_pairings(self):
        rng = np.random.default_rng(9)
        c = rand_spd(rng, 2)
        table = MomentTable(c)
        # E[x0^2 x1^2] = c00 c11 + 2 c01^2
        assert table.moment((0, 0, 1, 1)) == pytest.approx(
            c[0, 0] * c[1, 1] + 2 * c[0, 1] ** 2
        )
        # E[x0^4] = 3 c00^2
        assert table.moment((0, 0, 0, 0)) == pytest.approx(3 * c[0, 0] ** 2)
