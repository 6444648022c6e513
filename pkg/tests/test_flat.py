import math
from fractions import Fraction

import numpy as np
import pytest

from heatfix.flat import (
    DegenerateFixedPointError,
    SmoothMap,
    analyze,
    classify_fixed_point,
    curve_brackets_closed,
    curve_brackets_engine,
    curve_coefficients,
    curve_s_coefficients,
    find_fixed_points,
    integrate_over_curve,
    point_S_derivatives,
    point_coefficients,
    point_coefficients_via_engine,
    trace_curve,
)
from heatfix.poly import Poly

CIRCLE = ["x*(2 - (x^2 + y^2))", "y*(2 - (x^2 + y^2))"]


def rotation_map(theta):
    c, s = math.cos(theta), math.sin(theta)
    # fixed-point formatting: the expression grammar has no scientific notation
    return SmoothMap(
        [f"{c:.17f}*x - {s:.17f}*y", f"{s:.17f}*x + {c:.17f}*y"]
    )


class TestFixedPoints:
    def test_linear_scaling(self):
        m = SmoothMap(["2*x", "2*y"])
        roots, failures = find_fixed_points(m, [(0.3, 0.1)])
        assert not failures
        assert len(roots) == 1
        assert np.allclose(roots[0], [0, 0], atol=1e-10)

    def test_circle_map_roots(self):
        m = SmoothMap(CIRCLE)
        roots, _ = find_fixed_points(m, [(1.1, 0.05), (0.05, 0.02)])
        rads = sorted(np.linalg.norm(r) for r in roots)
        assert rads[0] == pytest.approx(0.0, abs=1e-9)
        assert rads[1] == pytest.approx(1.0, abs=1e-9)

    def test_identity_is_degenerate(self):
        m = SmoothMap(["x", "y"])
        with pytest.raises(DegenerateFixedPointError):
            classify_fixed_point(m, (0.2, 0.4))

    def test_classification(self):
        assert classify_fixed_point(SmoothMap(CIRCLE), (0.0, 0.0)) == "point"
        assert classify_fixed_point(SmoothMap(CIRCLE), (1.0, 0.0)) == "curve"


class TestTraceCurve:
    def test_unit_circle_geometry(self):
        m = SmoothMap(CIRCLE)
        curve = trace_curve(m, (1.0, 0.0), samples=128)
        assert curve.closed
        radii = np.linalg.norm(curve.points, axis=1)
        assert np.allclose(radii, 1.0, atol=1e-9)
        assert curve.length == pytest.approx(2 * math.pi, rel=1e-3)
        # outward normal h gives kappa = +1, inward gives -1; either sign
        # must be uniform along the curve with |kappa| = 1
        signs = np.sign(np.sum(curve.normals * curve.points, axis=1))
        assert np.allclose(curve.kappa, signs, atol=1e-7)

    def test_point_input_fails(self):
        m = SmoothMap(CIRCLE)
        from heatfix.flat import CurveTracingError

        with pytest.raises((CurveTracingError, DegenerateFixedPointError)):
            trace_curve(m, (0.0, 0.0), samples=16)

    def test_reflection_segment_mode(self):
        m = SmoothMap(["x", "-y"])  # fixed line y = 0
        curve = trace_curve(m, (0.0, 0.0), samples=32, allow_open=True)
        assert not curve.closed
        assert np.allclose(curve.points[:, 1], 0.0, atol=1e-12)
        assert np.allclose(np.abs(curve.tangents[:, 0]), 1.0, atol=1e-12)
        assert np.allclose(curve.kappa, 0.0, atol=1e-12)


class TestCurveCoefficients:
    def test_reflection_s_values(self):
        m = SmoothMap(["x", "-y"])
        curve = trace_curve(m, (0.0, 0.0), samples=16, allow_open=True)
        data = curve_s_coefficients(m, curve)
        assert np.allclose(data.s[2], 4.0, atol=1e-12)
        for k in (3, 4, 5, 6):
            assert np.allclose(data.s[k], 0.0, atol=1e-10)

    def test_circle_s_values(self):
        m = SmoothMap(CIRCLE)
        curve = trace_curve(m, (1.0, 0.0), samples=64)
        data = curve_s_coefficients(m, curve)
        assert np.allclose(data.s[2], 4.0, atol=1e-8)
        # s_3, s_5 and kappa flip sign together with h; compare orientation-free
        sgn = np.sign(data.kappa)
        assert np.allclose(sgn * data.s[3], 36.0, atol=1e-7)
        assert np.allclose(data.s[4], 156.0, atol=1e-6)
        assert np.allclose(sgn * data.s[5], 360.0, atol=1e-5)
        assert np.allclose(data.s[6], 360.0, atol=1e-4)

    def test_lemma_values_spot(self):
        # s2 = 4, rest 0, kappa = 0
        a0 = 1 / math.sqrt(16 * math.pi)
        brackets = curve_brackets_closed(0.25, {3: 0.0, 4: 0.0, 5: 0.0, 6: 0.0}, 0.0)
        assert brackets == [1, 0.0, 0.0]
        # s2 = 4, s3 = 36, s4 = 156, kappa = 1 -> a1 = a0 * 15/4
        b = curve_brackets_closed(
            Fraction(1, 4), {3: Fraction(36), 4: Fraction(156), 5: 0, 6: 0}, Fraction(1)
        )
        assert b[1] == Fraction(15, 4)

    def test_normal_flip_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            s = {k: float(rng.normal()) for k in (3, 4, 5, 6)}
            s2i = float(rng.uniform(0.2, 2.0))
            kap = float(rng.normal())
            plus = curve_brackets_closed(s2i, s, kap)
            flipped = {3: -s[3], 4: s[4], 5: -s[5], 6: s[6]}
            minus = curve_brackets_closed(s2i, flipped, -kap)
            assert plus[1] == pytest.approx(minus[1], rel=1e-12, abs=1e-15)
            assert plus[2] == pytest.approx(minus[2], rel=1e-12, abs=1e-15)

    def test_engine_regenerates_lemma_symbolically(self):
        # abstract scalars: the engine must reproduce the closed forms term
        # for term as polynomials in {s3..s6, kappa, s2inv}
        sym = {k: Poly.symbol(f"s{k}") for k in (3, 4, 5, 6)}
        kappa = Poly.symbol("kappa")
        s2inv = Poly.symbol("s2inv")
        engine = curve_brackets_engine(s2inv, sym, kappa, order=2)
        closed = curve_brackets_closed(s2inv, sym, kappa)
        assert engine[0] == Poly.const(1)
        assert engine[1] == closed[1]
        assert engine[2] == closed[2]


class TestIntegrate:
    def test_constant_on_circle(self):
        m = SmoothMap(CIRCLE)
        curve = trace_curve(m, (1.0, 0.0), samples=256)
        val = integrate_over_curve(curve, np.full(curve.samples, 3.0))
        assert val == pytest.approx(3 * 2 * math.pi, rel=1e-4)

    def test_circle_a0_integral(self):
        m = SmoothMap(CIRCLE)
        curve = trace_curve(m, (1.0, 0.0), samples=256)
        data = curve_s_coefficients(m, curve)
        dens = curve_coefficients(data)
        a0_total = integrate_over_curve(curve, dens[0])
        assert a0_total == pytest.approx(math.sqrt(math.pi / 4), rel=1e-4)


class TestPointCoefficients:
    @pytest.mark.parametrize("theta", [math.pi / 3, math.pi / 2, math.pi])
    def test_rotation(self, theta):
        m = rotation_map(theta)
        phase = point_S_derivatives(m, (0.0, 0.0))
        a0, a1, a2 = point_coefficients(phase)
        assert float(a0) == pytest.approx(1 / (4 * math.sin(theta / 2) ** 2), rel=1e-12)
        assert float(a1) == pytest.approx(0.0, abs=1e-14)
        assert float(a2) == pytest.approx(0.0, abs=1e-14)

    def test_scaling(self):
        m = SmoothMap(["2*x", "2*y"])
        phase = point_S_derivatives(m, (0.0, 0.0))
        a = point_coefficients(phase)
        assert float(a[0]) == pytest.approx(1.0, rel=1e-14)
        assert float(a[1]) == pytest.approx(0.0, abs=1e-14)

    def test_linear_det_formula(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            mat = rng.normal(size=(2, 2))
            if abs(np.linalg.det(np.eye(2) - mat)) < 0.3:
                continue
            m = SmoothMap(
                [
                    f"{mat[0,0]}*x + {mat[0,1]}*y",
                    f"{mat[1,0]}*x + {mat[1,1]}*y",
                ]
            )
            phase = point_S_derivatives(m, (0.0, 0.0))
            a0 = float(point_coefficients(phase, order=0)[0])
            assert a0 == pytest.approx(
                1 / abs(np.linalg.det(np.eye(2) - mat)), rel=1e-10
            )

    def test_closed_form_matches_engine(self):
        rng = np.random.default_rng(11)
        for trial in range(8):
            coef = rng.normal(size=12) * 0.3
            m = SmoothMap(
                [
                    f"2*x + {coef[0]}*x^2 + {coef[1]}*x*y + {coef[2]}*y^2"
                    f" + {coef[3]}*x^3 + {coef[4]}*y^3",
                    f"-y + {coef[5]}*x^2 + {coef[6]}*x*y + {coef[7]}*y^2"
                    f" + {coef[8]}*x^3 + {coef[9]}*x^2*y",
                ]
            )
            phase = point_S_derivatives(m, (0.0, 0.0))
            closed = point_coefficients(phase)
            engine = point_coefficients_via_engine(phase).coefficients
            for a, b in zip(closed, engine):
                assert float(a) == pytest.approx(float(b), rel=1e-12, abs=1e-13)

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(5)
        coef = rng.normal(size=6) * 0.4
        base = [
            f"2*x + {coef[0]}*x^2 + {coef[1]}*x*y + {coef[2]}*y^3",
            f"-y + {coef[3]}*y^2 + {coef[4]}*x*y + {coef[5]}*x^3",
        ]
        m = SmoothMap(base)
        th = 0.83
        c, s = math.cos(th), math.sin(th)
        # conjugate by the rotation R: x -> R phi(R^T x)
        xr = f"({c}*x + {s}*y)"
        yr = f"({-s}*x + {c}*y)"
        comps = [b.replace("x", "XX").replace("y", yr).replace("XX", xr) for b in base]
        conj = [
            f"{c}*({comps[0]}) - {s}*({comps[1]})",
            f"{s}*({comps[0]}) + {c}*({comps[1]})",
        ]
        m2 = SmoothMap(conj)
        a = point_coefficients(point_S_derivatives(m, (0.0, 0.0)))
        b = point_coefficients(point_S_derivatives(m2, (0.0, 0.0)))
        for u, v in zip(a, b):
            assert float(u) == pytest.approx(float(v), rel=1e-9, abs=1e-11)


class TestAnalyze:
    def test_circle_map_full(self):
        m = SmoothMap(CIRCLE)
        res = analyze(m, [(1.05, 0.1), (0.02, 0.01)], order=2, curve_samples=128)
        assert len(res.points) == 1 and len(res.curves) == 1
        assert res.points[0].coefficients[0] == pytest.approx(1.0, rel=1e-10)
        lad = res.ladder
        assert lad[Fraction(-1, 2)] == pytest.approx(math.sqrt(math.pi / 4), rel=1e-6)
        a1_expect = math.sqrt(math.pi / 4) * 15 / 4
        assert lad[Fraction(1, 2)] == pytest.approx(a1_expect, rel=1e-5)
