import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatfix.tensor import Bilinear, CapacityError, SymTensor, symmetrize
from heatfix.wick import (
    ContractionGraph,
    OddTotalRankError,
    brute_force_contraction,
    enumerate_graphs,
    evaluate_contraction,
    graph_weight,
    merge_equal_factors,
)

from tables import ALL_TABLES, TABLE_3x4, TABLE_3x24, as_weighted_pairs


def rand_sym(rng, dim, rank):
    a = np.empty((dim,) * rank, dtype=object)
    for idx in itertools.product(range(dim), repeat=rank):
        a[idx] = Fraction(int(rng.integers(-5, 6)), int(rng.integers(1, 4)))
    return symmetrize(a)


def rand_spd_bilinear(rng, dim):
    # L L^T + I with small rational L is rationally SPD
    l = np.empty((dim, dim), dtype=object)
    for i in range(dim):
        for j in range(dim):
            l[i, j] = Fraction(int(rng.integers(-2, 3)), int(rng.integers(1, 3)))
    m = l @ l.T
    for i in range(dim):
        m[i, i] = m[i, i] + 1
    return Bilinear(m)


class TestEnumerate:
    def test_single_rank2(self):
        wgs = enumerate_graphs((2,))
        assert len(wgs.graphs) == 1
        g, w = wgs.graphs[0]
        assert g.adjacency == ((2,),) and w == 1

    def test_odd_total_rank_raises(self):
        with pytest.raises(OddTotalRankError):
            enumerate_graphs((3, 2))

    @pytest.mark.parametrize("name", sorted(ALL_TABLES))
    def test_paper_tables(self, name):
        table = ALL_TABLES[name]
        wgs = enumerate_graphs(table["ranks"])
        got = [(g.adjacency, w) for g, w in wgs.graphs]
        assert got == as_weighted_pairs(table)

    def test_3333_has_47_graphs_and_last_weight(self):
        wgs = enumerate_graphs((3, 3, 3, 3))
        assert len(wgs.graphs) == 47
        assert wgs.graphs[-1][1] == Fraction(4, 1155)

    def test_weights_sum_to_one_small_scan(self):
        for total in (2, 4, 6, 8):
            for k in range(1, total + 1):
                for comp in itertools.product(range(1, total + 1), repeat=k):
                    if sum(comp) == total:
                        assert enumerate_graphs(comp).total_weight() == 1


class TestWeightFormula:
    def test_33_weights(self):
        ranks = (3, 3)
        g1 = ContractionGraph(((2, 1), (1, 2)))
        g2 = ContractionGraph(((0, 3), (3, 0)))
        assert graph_weight(ranks, g1) == Fraction(3, 5)
        assert graph_weight(ranks, g2) == Fraction(2, 5)


class TestMerge:
    def test_all_equal_3x4(self):
        wgs = enumerate_graphs((3, 3, 3, 3))
        merged = merge_equal_factors(wgs, [[0, 1, 2, 3]])
        got = [(g.adjacency, w) for g, w in merged.graphs]
        assert got == as_weighted_pairs(TABLE_3x4)

    def test_first_two_equal_3x24(self):
        wgs = enumerate_graphs((3, 3, 4))
        merged = merge_equal_factors(wgs, [[0, 1], [2]])
        got = [(g.adjacency, w) for g, w in merged.graphs]
        assert got == as_weighted_pairs(TABLE_3x24)

    def test_trivial_partition_is_identity(self):
        wgs = enumerate_graphs((3, 3, 4))
        merged = merge_equal_factors(wgs, [[0], [1], [2]])
        assert [(g.adjacency, w) for g, w in merged.graphs] == [
            (g.adjacency, w) for g, w in wgs.graphs
        ]

    def test_rejects_uneven_ranks(self):
        wgs = enumerate_graphs((3, 3, 4))
        with pytest.raises(ValueError):
            merge_equal_factors(wgs, [[0, 2], [1]])


class TestEvaluate:
    def test_single_rank2_is_q_trace(self):
        rng = np.random.default_rng(0)
        a = rand_sym(rng, 2, 2)
        q = rand_spd_bilinear(rng, 2)
        got = evaluate_contraction([a], q)
        expect = sum(
            q[i, j] * a[(i, j)] for i in range(2) for j in range(2)
        )
        assert got == expect

    def test_odd_rank_sum_is_zero(self):
        rng = np.random.default_rng(1)
        a = rand_sym(rng, 2, 3)
        assert evaluate_contraction([a], Bilinear.identity(2)) == 0

    def test_33_matches_corollary_expansion(self):
        rng = np.random.default_rng(2)
        a = rand_sym(rng, 2, 3)
        b = rand_sym(rng, 2, 3)
        q = rand_spd_bilinear(rng, 2)
        ad, bd, qm = a.todense(), b.todense(), q.entries
        t1 = np.einsum("abc,def,ab,de,cf->", ad, bd, qm, qm, qm)  # ((2,1),(1,2))
        t2 = np.einsum("abc,def,ad,be,cf->", ad, bd, qm, qm, qm)  # ((0,3),(3,0))
        expect = Fraction(3, 5) * Fraction(t1) + Fraction(2, 5) * Fraction(t2)
        assert evaluate_contraction([a, b], q) == expect

    def test_zero_tensors(self):
        z = SymTensor.zero(2, 4)
        assert brute_force_contraction([z, z], Bilinear.identity(2)) == 0

    @settings(max_examples=8, deadline=None)
    @given(st.integers(0, 10_000))
    def test_matches_brute_force_33(self, seed):
        rng = np.random.default_rng(seed)
        a = rand_sym(rng, 2, 3)
        b = rand_sym(rng, 2, 3)
        q = rand_spd_bilinear(rng, 2)
        assert evaluate_contraction([a, b], q) == brute_force_contraction([a, b], q)

    def test_matches_brute_force_35_dim2(self):
        rng = np.random.default_rng(33)
        a = rand_sym(rng, 2, 3)
        b = rand_sym(rng, 2, 5)
        q = rand_spd_bilinear(rng, 2)
        assert evaluate_contraction([a, b], q) == brute_force_contraction([a, b], q)

    def test_brute_force_cap(self):
        a = SymTensor.zero(2, 5)
        with pytest.raises(CapacityError):
            brute_force_contraction([a, a], Bilinear.identity(2))

    def test_float_mode(self):
        rng = np.random.default_rng(4)
        a = symmetrize(rng.normal(size=(2, 2, 2)))
        b = symmetrize(rng.normal(size=(2, 2, 2)))
        q = Bilinear(np.eye(2, dtype=object))
        got = evaluate_contraction([a, b], q)
        ref = brute_force_contraction([a, b], q)
        assert got == pytest.approx(ref, rel=1e-12)
