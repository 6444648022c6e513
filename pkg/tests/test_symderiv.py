import itertools
import math
from pathlib import Path

import pytest

from heatfix.symderiv import (
    TermSignature,
    coeff_closed_form,
    coeff_recursive,
    emit_latex,
    enumerate_terms,
    normalize_block,
)

GOLDEN = Path(__file__).parent / "golden"


def all_signatures(n):
    for k in range(n + 1):
        for m in range(n - k + 1):
            rest = n - k - m
            if k == 0:
                if rest == 0:
                    yield (0, m, ())
                continue
            for j in itertools.product(range(rest + 1), repeat=k):
                if sum(j) == rest:
                    yield (k, m, j)


class TestCoefficients:
    def test_initial_condition(self):
        assert coeff_recursive(0, 0, ()) == 1
        assert coeff_closed_form(0, 0, ()) == 1

    def test_paper_values(self):
        # n = 3 term with coefficient 2, and the n = 6 coefficient 15
        assert coeff_recursive(2, 0, (1, 0)) == 2
        assert coeff_closed_form(2, 0, (1, 0)) == 2
        assert coeff_recursive(4, 2, (0, 0, 0, 0)) == 15
        assert coeff_closed_form(4, 2, (0, 0, 0, 0)) == 15

    def test_negative_arguments_zero(self):
        assert coeff_recursive(1, -1, (0,)) == 0

    def test_single_factor_binomial(self):
        # c(1, m; (j)) = C(n, m) * c'..., sanity against the closed form only
        for n in range(1, 7):
            for m in range(n):
                j = n - 1 - m
                assert coeff_closed_form(1, m, (j,)) == coeff_recursive(1, m, (j,))

    @pytest.mark.parametrize("n", range(1, 9))
    def test_recursive_equals_closed_exhaustive(self, n):
        for k, m, j in all_signatures(n):
            assert coeff_recursive(k, m, j) == coeff_closed_form(k, m, j), (k, m, j)

    @pytest.mark.parametrize("n", range(1, 6))
    def test_permutation_count_identity(self, n):
        # every permutation of n product-rule differentiations lands in exactly
        # one signature class; the admissible-permutation counts must add up
        # to the total number of terms in the derivative of f(x, Phi(x)),
        # which satisfies T(n) = sum over signatures of c(k, m; j)
        total = sum(coeff_recursive(k, m, j) for k, m, j in all_signatures(n))
        # independent count: differentiate term-by-term; each derivative of a
        # term with p dPhi factors creates (p + 2) descendants (f first-arg,
        # f second-arg creating a new dPhi, or one of the p factors)
        def brute(n):
            # states: number of dPhi factors per term, start with f itself
            terms = [0]
            for _ in range(n):
                new = []
                for p in terms:
                    new.append(p)  # d/d first argument
                    new.append(p + 1)  # d/d second argument: new dPhi factor
                    new.extend([p] * p)  # derivative onto an existing factor
                terms = new
            return len(terms)

        assert total == brute(n)


class TestEnumeration:
    def test_unfiltered_counts_are_2_to_n(self):
        for n in range(1, 9):
            assert len(enumerate_terms(n, sigma_filter=False)) == 2**n

    def test_n3_filtered_terms(self):
        got = enumerate_terms(3)
        sigs = [((s.k, s.m, s.j), c) for s, c in got]
        assert sigs == [
            ((1, 1, (1,)), 3),
            ((2, 0, (0, 1)), 1),
            ((2, 0, (1, 0)), 2),
        ]

    def test_filter_drops_vanishing_classes(self):
        for s, _ in enumerate_terms(6):
            t = s.k + s.m
            assert t != 3
            assert not (s.k == 1 and s.m >= 2)
            assert not (s.k >= 5 and s.k >= 3)


class TestLatex:
    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_golden_blocks(self, n):
        golden = (GOLDEN / f"symderiv_n{n}.tex").read_text()
        assert normalize_block(emit_latex(n)) == normalize_block(golden)

    def test_alphabet_exhaustion(self):
        with pytest.raises(ValueError):
            emit_latex(11)
