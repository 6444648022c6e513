import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heatfix.expr import DomainError, ParseError, evaluate, parse, unparse
from heatfix.jets import JetValue, derivative_tensor_entries, jet_eval


class TestParser:
    def test_circle_map_component(self):
        node = parse("x*(2 - (x^2+y^2))")
        assert evaluate(node, (1.0, 0.0)) == pytest.approx(1.0)
        assert evaluate(node, (0.5, 0.5)) == pytest.approx(0.5 * (2 - 0.5))

    def test_syntax_error_offset(self):
        with pytest.raises(ParseError) as err:
            parse("x +")
        assert err.value.offset == 3

    def test_trig_at_origin(self):
        assert evaluate(parse("sin(x)*cos(y)"), (0.0, 0.0)) == 0.0

    def test_unknown_identifier(self):
        with pytest.raises(ParseError) as err:
            parse("2*zz + 1")
        assert err.value.offset == 2

    def test_unbalanced_parens(self):
        with pytest.raises(ParseError):
            parse("(x + y")

    def test_non_integer_exponent_rejected(self):
        with pytest.raises(ParseError):
            parse("x^1.5")

    def test_roundtrip_fixed_point(self):
        for text in [
            "x*(2 - (x^2+y^2))",
            "-x + 3.5*y/2",
            "sin(x)*cos(y) - exp(x*y)",
            "x^-2 + sqrt(x1)",
            "2 - x2^3",
        ]:
            node = parse(text)
            printed = unparse(node)
            node2 = parse(printed)
            assert unparse(node2) == printed
            pt = (0.7, 0.3)
            assert evaluate(node, pt) == pytest.approx(evaluate(node2, pt))

    def test_numpy_vectorized(self):
        node = parse("x^2 + sin(y)")
        xs = np.linspace(0, 1, 5)
        ys = np.linspace(0, 2, 5)
        got = evaluate(node, (xs, ys))
        assert np.allclose(got, xs**2 + np.sin(ys))


class TestJets:
    def test_square_at_point(self):
        node = parse("x^2")
        j = jet_eval(node, (1.0, 0.0), 2)
        assert j.coefficient((0, 0)) == pytest.approx(1.0)
        assert j.coefficient((1, 0)) == pytest.approx(2.0)
        assert j.coefficient((2, 0)) == pytest.approx(1.0)

    def test_sin_maclaurin(self):
        j = jet_eval(parse("sin(x)"), (0.0, 0.0), 5)
        expect = [0, 1, 0, -1 / 6, 0, 1 / 120]
        for k, c in enumerate(expect):
            assert j.coefficient((k, 0)) == pytest.approx(c, abs=1e-15)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10_000))
    def test_product_rule(self, seed):
        rng = np.random.default_rng(seed)
        pt = tuple(rng.uniform(0.2, 1.0, 2))
        f = parse("sin(x) + x*y^2")
        g = parse("exp(y/2) - x^3")
        jf = jet_eval(f, pt, 4)
        jg = jet_eval(g, pt, 4)
        jfg = jet_eval(parse("(sin(x) + x*y^2) * (exp(y/2) - x^3)"), pt, 4)
        prod = jf * jg
        for k, v in jfg.coeffs.items():
            assert prod.coefficient(k) == pytest.approx(v, rel=1e-12, abs=1e-12)

    def test_log_domain_error_with_offset(self):
        node = parse("1 + log(x - 2)")
        with pytest.raises(DomainError) as err:
            jet_eval(node, (1.0, 0.0), 2)
        assert err.value.offset == 4

    def test_division_and_sqrt(self):
        node = parse("sqrt(x) / y")
        j = jet_eval(node, (4.0, 2.0), 3)
        assert j.value() == pytest.approx(1.0)
        # d/dx sqrt(x)/y = 1/(2 sqrt(x) y) = 1/8 at (4, 2)
        assert j.derivative((1, 0)) == pytest.approx(1 / 8)
        # d/dy = -sqrt(x)/y^2 = -1/2
        assert j.derivative((0, 1)) == pytest.approx(-0.5)

    def test_finite_difference_cross_check(self):
        node = parse("exp(x*y) * sin(x) + y^3")
        pt = (0.4, 0.7)
        j = jet_eval(node, pt, 3)
        h = 1e-5

        def f(x, y):
            return evaluate(node, (x, y))

        fd_x = (f(pt[0] + h, pt[1]) - f(pt[0] - h, pt[1])) / (2 * h)
        fd_xy = (
            f(pt[0] + h, pt[1] + h)
            - f(pt[0] + h, pt[1] - h)
            - f(pt[0] - h, pt[1] + h)
            + f(pt[0] - h, pt[1] - h)
        ) / (4 * h * h)
        assert j.derivative((1, 0)) == pytest.approx(fd_x, rel=1e-6)
        assert j.derivative((1, 1)) == pytest.approx(fd_xy, rel=1e-5)

    def test_derivative_tensor_entries(self):
        j = jet_eval(parse("x^2*y"), (1.0, 1.0), 3)
        entries = derivative_tensor_entries(j, 2)
        assert entries[(0, 0)] == pytest.approx(2.0)  # d^2/dx^2 = 2y
        assert entries[(0, 1)] == pytest.approx(2.0)  # d^2/dxdy = 2x
        assert entries[(1, 1)] == pytest.approx(0.0)

    def test_integer_power_negative(self):
        j = jet_eval(parse("x^-2"), (2.0, 0.0), 2)
        assert j.value() == pytest.approx(0.25)
        assert j.derivative((1, 0)) == pytest.approx(-2 / 2**3)
