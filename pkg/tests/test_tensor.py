import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatfix.tensor import (
    Bilinear,
    CapacityError,
    SymTensor,
    eval_poly,
    sym_product,
    symmetrize,
    tau,
    tau_power,
    transform,
)

fractions_st = st.fractions(
    min_value=Fraction(-5), max_value=Fraction(5), max_denominator=6
)


def rand_dense(rng, dim, rank):
    a = np.empty((dim,) * rank, dtype=object)
    for idx in itertools.product(range(dim), repeat=rank):
        a[idx] = Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 5)))
    return a


def rand_sym(rng, dim, rank):
    return symmetrize(rand_dense(rng, dim, rank))


class TestSymmetrize:
    def test_already_symmetric_unchanged(self):
        a = np.empty((2, 2), dtype=object)
        a[...] = [[Fraction(1), Fraction(2)], [Fraction(2), Fraction(5)]]
        s = symmetrize(a)
        assert s[(0, 1)] == 2 and s[(1, 0)] == 2 and s[(1, 1)] == 5

    def test_antisymmetric_rank2_is_zero(self):
        a = np.empty((2, 2), dtype=object)
        a[...] = [[Fraction(0), Fraction(3)], [Fraction(-3), Fraction(0)]]
        s = symmetrize(a)
        assert all(v == 0 for v in s.data.values())

    def test_rank3_matches_six_term_loop(self):
        rng = np.random.default_rng(7)
        a = rand_dense(rng, 2, 3)
        s = symmetrize(a)
        for idx in itertools.product(range(2), repeat=3):
            expect = sum(
                a[tuple(idx[p] for p in perm)]
                for perm in itertools.permutations(range(3))
            ) / Fraction(6)
            assert s[idx] == expect

    def test_rank_cap(self):
        with pytest.raises(CapacityError):
            symmetrize(np.zeros((1,) * 13), rank_cap=12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 1000))
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        a = rand_dense(rng, 2, 3)
        s1 = symmetrize(a)
        s2 = symmetrize(s1.todense())
        assert s1 == s2


class TestSymProduct:
    def test_commutative(self):
        rng = np.random.default_rng(3)
        a = rand_sym(rng, 2, 2)
        b = rand_sym(rng, 2, 3)
        assert sym_product(a, b) == sym_product(b, a)

    def test_scalar_identity(self):
        rng = np.random.default_rng(4)
        b = rand_sym(rng, 2, 3)
        one = SymTensor.scalar(2, Fraction(1))
        assert sym_product(one, b) == b

    def test_vector_square(self):
        v = SymTensor.from_vector([Fraction(2), Fraction(-3)])
        vv = sym_product(v, v)
        for i in range(2):
            for j in range(2):
                assert vv[(i, j)] == v[(i,)] * v[(j,)]

    def test_associative(self):
        rng = np.random.default_rng(5)
        a = rand_sym(rng, 2, 1)
        b = rand_sym(rng, 2, 2)
        c = rand_sym(rng, 2, 1)
        lhs = sym_product(sym_product(a, b), c)
        rhs = sym_product(a, sym_product(b, c))
        assert lhs == rhs

    def test_matches_dense_definition(self):
        rng = np.random.default_rng(6)
        a = rand_sym(rng, 2, 2)
        b = rand_sym(rng, 2, 2)
        dense = np.multiply.outer(a.todense(), b.todense())
        assert sym_product(a, b) == symmetrize(dense)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            sym_product(SymTensor.zero(2, 1), SymTensor.zero(3, 1))


class TestTau:
    def test_identity_gives_trace(self):
        rng = np.random.default_rng(8)
        a = rand_sym(rng, 3, 2)
        t = tau(a, Bilinear.identity(3))
        assert t.rank == 0
        assert t[()] == sum(a[(i, i)] for i in range(3))

    def test_low_rank_contracts_to_zero(self):
        q = Bilinear.identity(2)
        assert tau(SymTensor.from_vector([1, 2]), q)[()] == 0
        assert tau(SymTensor.scalar(2, 5), q)[()] == 0

    def test_moment_identity_v4(self):
        # tau^2(v v v v v v) with Q = I equals |v|^4 by brute index summation
        v = SymTensor.from_vector([Fraction(1), Fraction(2)])
        v4 = sym_product(sym_product(v, v), sym_product(v, v))
        got = tau_power(v4, Bilinear.identity(2), 2)[()]
        dense = v4.todense()
        brute = sum(
            dense[a, a, b, b] for a in range(2) for b in range(2)
        )
        norm2 = Fraction(1 * 1 + 2 * 2)
        assert got == brute == norm2 ** 2

    def test_scaling(self):
        rng = np.random.default_rng(9)
        a = rand_sym(rng, 2, 4)
        q = Bilinear.identity(2)
        assert tau(a.scale(Fraction(7, 3)), q) == tau(a, q).scale(Fraction(7, 3))


class TestEvalPoly:
    def test_rank0(self):
        assert eval_poly(SymTensor.scalar(2, Fraction(9)), [1, 1]) == 9

    def test_rank1(self):
        a = SymTensor.from_vector([Fraction(1), Fraction(0)])
        assert eval_poly(a, [Fraction(3), Fraction(0)]) == 3

    def test_rank2_identity(self):
        a = SymTensor(2, 2, {(0, 0): Fraction(1), (1, 1): Fraction(1)})
        assert eval_poly(a, [Fraction(1), Fraction(2)]) == Fraction(5, 2)


class TestTransform:
    def test_rotation_preserves_full_contraction(self):
        rng = np.random.default_rng(11)
        a = rand_sym(rng, 2, 4)
        th = 0.7
        r = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        q = Bilinear.identity(2)
        before = float(tau_power(a, q, 2)[()])
        after = float(tau_power(transform(a, r), q, 2)[()])
        assert abs(before - after) < 1e-10 * max(1.0, abs(before))
