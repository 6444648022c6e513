"""Flat R^2 pipeline: fixed points of a smooth map, curve tracing, and the
closed-form expansion coefficients for curve and point components.

The trace of the deformed heat kernel localizes onto the fixed-point set of
the map.  A one-dimensional component contributes a t^{-1/2} ladder with
per-point densities a_0, a_1, a_2 built from normal derivatives s_k of the
squared displacement S = |Phi(x) - x|^2 / 2; a zero-dimensional component
contributes an integer ladder A_0, A_1, A_2 built from the symmetrized
derivatives of S at the point and the inverse Hessian Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import expr as _expr
from .jets import JetValue, derivative_tensor_entries, jet_eval
from .laplace import (
    ExpansionResult,
    GradedSeries,
    PhaseJet,
    PrefactorJet,
    b_polynomials,
    normalized_average,
    tilde,
)
from .tensor import Bilinear, SymTensor, sym_product
from .gauss import exact_det, exact_inverse, _chol_or_raise
from .wick import evaluate_contraction

KERNEL_SV_THRESHOLD = 1e-7


class DegenerateFixedPointError(ValueError):
    pass


class CurveTracingError(RuntimeError):
    pass


class SmoothMap:
    """A smooth self-map of R^2 given by two component expressions."""

    def __init__(self, components):
        self.dim = 2
        self.asts = []
        for c in components:
            self.asts.append(_expr.parse(c) if isinstance(c, str) else c)
        if len(self.asts) != 2:
            raise ValueError("SmoothMap needs exactly two component expressions")

    def __call__(self, x, y):
        return tuple(_expr.evaluate(a, (x, y)) for a in self.asts)

    def psi(self, x, y):
        fx, fy = self(x, y)
        return fx - x, fy - y

    def s_value(self, x, y):
        px, py = self.psi(x, y)
        return 0.5 * (px * px + py * py)

    def jets(self, point, order: int) -> list[JetValue]:
        return [jet_eval(a, point, order) for a in self.asts]

    def dphi(self, point) -> np.ndarray:
        js = self.jets(point, 1)
        return np.array(
            [[js[m].derivative((1, 0)), js[m].derivative((0, 1))] for m in range(2)]
        )

    def psi_tensors(self, point, max_order: int) -> list[dict]:
        """Per component mu: {l: SymTensor of the l-th derivative of Psi^mu}."""
        js = self.jets(point, max_order)
        out = []
        for mu in range(2):
            tensors = {}
            for l in range(1, max_order + 1):
                entries = derivative_tensor_entries(js[mu], l)
                if l == 1:
                    entries = dict(entries)
                    entries[(mu,)] = entries[(mu,)] - 1.0  # d(identity)
                t = SymTensor(2, l, entries)
                tensors[l] = t
            out.append(tensors)
        return out


# -- fixed points -------------------------------------------------------------


def find_fixed_points(m: SmoothMap, seeds, tol: float = 1e-12, max_iter: int = 100):
    """Gauss-Newton roots of Phi(x) - x from each seed, deduplicated.

    Returns (roots, failures); a non-converged seed is recorded, not fatal.
    """
    roots: list[np.ndarray] = []
    failures: list[tuple] = []
    for seed in seeds:
        x = np.array(seed, dtype=float)
        ok = False
        for _ in range(max_iter):
            px, py = m.psi(x[0], x[1])
            r = np.array([px, py])
            if np.linalg.norm(r) <= tol * (1 + np.linalg.norm(x)):
                ok = True
                break
            j = m.dphi(x) - np.eye(2)
            step, *_ = np.linalg.lstsq(j, -r, rcond=None)
            if not np.all(np.isfinite(step)):
                break
            x = x + step
        if not ok:
            failures.append((tuple(seed), "no convergence"))
            continue
        if not any(np.linalg.norm(x - r0) < 1e-8 for r0 in roots):
            roots.append(x)
    return roots, failures


def classify_fixed_point(m: SmoothMap, x0) -> str:
    """'point' or 'curve' from the singular values of I - dPhi."""
    a = np.eye(2) - m.dphi(np.asarray(x0, dtype=float))
    sv = np.linalg.svd(a, compute_uv=False)
    scale = max(1.0, sv[0])
    small = sv < KERNEL_SV_THRESHOLD * scale
    if small.all():
        raise DegenerateFixedPointError(
            "degenerate: dPhi = I to working precision at the fixed point"
        )
    return "curve" if small[1] else "point"


# -- curve components ---------------------------------------------------------


@dataclass
class ClosedCurve:
    points: np.ndarray  # (N, 2) on-curve samples
    tangents: np.ndarray  # e per sample, unit
    normals: np.ndarray  # h per sample, unit, e.h = 0
    kappa: np.ndarray  # volume curvature per sample
    length: float
    closed: bool = True

    @property
    def samples(self) -> int:
        return len(self.points)


@dataclass
class CurveLocalData:
    s: dict  # {k: array of s_k per sample}, k = 2..6
    kappa: np.ndarray


def _kernel_tangent(a: np.ndarray) -> np.ndarray:
    _, sv, vt = np.linalg.svd(a)
    if sv[0] < KERNEL_SV_THRESHOLD:
        raise DegenerateFixedPointError("degenerate: dPhi = I at curve point")
    if sv[1] > KERNEL_SV_THRESHOLD * max(1.0, sv[0]):
        raise CurveTracingError(
            f"kernel of I - dPhi has rank != 1 (singular values {sv})"
        )
    return vt[1]


def _project_to_curve(m: SmoothMap, x, iters: int = 25, tol: float = 1e-14):
    x = np.array(x, dtype=float)
    for _ in range(iters):
        px, py = m.psi(x[0], x[1])
        r = np.array([px, py])
        if np.linalg.norm(r) <= tol * (1 + np.linalg.norm(x)):
            return x
        j = m.dphi(x) - np.eye(2)
        step, *_ = np.linalg.lstsq(j, -r, rcond=None)
        x = x + step
    return x


def trace_curve(
    m: SmoothMap,
    start,
    samples: int = 256,
    step: float | None = None,
    max_steps: int = 100_000,
    closure_tol: float = 1e-6,
    allow_open: bool = False,
) -> ClosedCurve:
    """Follow the kernel direction of I - dPhi around a closed fixed curve.

    The marched polyline is resampled to `samples` roughly-uniform arclength
    positions, each re-projected onto the curve; tangent, normal and the
    volume curvature are produced per sample.  `allow_open` is the straight
    segment test mode: tracing stops at max_steps without requiring closure.
    """
    x0 = _project_to_curve(m, np.asarray(start, dtype=float))
    e0 = _kernel_tangent(np.eye(2) - m.dphi(x0))
    h = step if step is not None else 0.02 * max(1.0, float(np.linalg.norm(x0)))
    pts = [x0.copy()]
    e_prev = e0
    closed = False
    for n in range(max_steps):
        x = pts[-1]
        e = _kernel_tangent(np.eye(2) - m.dphi(x))
        if np.dot(e, e_prev) < 0:
            e = -e
        e_prev = e
        x_new = _project_to_curve(m, x + h * e)
        pts.append(x_new)
        if n >= 4 and np.linalg.norm(x_new - x0) < 0.75 * h:
            closed = True
            break
        if allow_open and n + 2 >= samples:
            break
    if not closed and not allow_open:
        raise CurveTracingError(
            f"curve failed to close within {max_steps} steps (gap "
            f"{np.linalg.norm(pts[-1] - x0):.3e})"
        )
    poly = np.array(pts)
    if closed:
        seg = np.linalg.norm(np.diff(np.vstack([poly, poly[:1]]), axis=0), axis=1)
    else:
        seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    total = float(seg.sum())
    # resample to uniform arclength targets and re-project onto the curve
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, total, samples, endpoint=False)
    resampled = []
    for s in targets:
        i = int(np.searchsorted(cum, s, side="right") - 1)
        i = min(i, len(poly) - 1)
        j = (i + 1) % len(poly)
        seg_len = seg[i] if i < len(seg) else 1.0
        frac = (s - cum[i]) / seg_len if seg_len > 0 else 0.0
        guess = poly[i] + frac * (poly[j] - poly[i])
        resampled.append(_project_to_curve(m, guess))
    points = np.array(resampled)

    tangents = np.empty_like(points)
    normals = np.empty_like(points)
    kap = np.empty(samples)
    for i, p in enumerate(points):
        a = np.eye(2) - m.dphi(p)
        e = _kernel_tangent(a)
        ahead = points[(i + 1) % samples] - points[i - 1]
        if np.dot(e, ahead) < 0:
            e = -e
        hn = np.array([e[1], -e[0]])
        tangents[i] = e
        normals[i] = hn
        kap[i] = _volume_curvature(m, p, e, hn)

    # verify closure quality at the resampled scale
    if closed:
        gap = np.linalg.norm(points[0] - _project_to_curve(m, points[0]))
        if gap > closure_tol:
            raise CurveTracingError(f"closure gap {gap:.3e} exceeds {closure_tol}")
        lengths = np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)
        length = float(lengths.sum())
    else:
        length = float(
            np.linalg.norm(np.diff(points, axis=0), axis=1).sum()
        )
    return ClosedCurve(points, tangents, normals, kap, length, closed)


def _volume_curvature(m: SmoothMap, p, e, hn) -> float:
    """kappa with dvol = (1 + z kappa) dy dz: kappa = h . (dPsi)^+ Psi''[e, e]."""
    js = m.jets(p, 2)
    dpsi = m.dphi(p) - np.eye(2)
    w = np.empty(2)
    for mu in range(2):
        d20 = js[mu].derivative((2, 0))
        d11 = js[mu].derivative((1, 1))
        d02 = js[mu].derivative((0, 2))
        w[mu] = d20 * e[0] ** 2 + 2 * d11 * e[0] * e[1] + d02 * e[1] ** 2
    corr = np.linalg.pinv(dpsi, rcond=1e-9) @ w
    return float(np.dot(hn, corr))


def curve_s_coefficients(m: SmoothMap, comp: ClosedCurve, max_k: int = 6) -> CurveLocalData:
    """Normal-line derivatives s_k = nabla_h^k S per sample, k = 2..max_k.

    Psi_(l) is the l-th derivative of Psi along the straight line z -> p + z h;
    s_k combines them through s_k = (1/2) sum_l C(k, l) Psi_(l) . Psi_(k-l).
    """
    n = comp.samples
    s = {k: np.empty(n) for k in range(2, max_k + 1)}
    for i in range(n):
        p = comp.points[i]
        hvec = comp.normals[i]
        js = m.jets(p, max_k - 1)
        psi_l = np.zeros((max_k, 2))  # psi_l[l - 1, mu]
        for l in range(1, max_k):
            for mu in range(2):
                acc = 0.0
                for j0 in range(l + 1):
                    j1 = l - j0
                    c = js[mu].coefficient((j0, j1))
                    if c != 0.0:
                        acc += c * hvec[0] ** j0 * hvec[1] ** j1
                val = acc * math.factorial(l)
                if l == 1:
                    val -= hvec[mu]  # derivative of the identity part
                psi_l[l - 1, mu] = val
        if np.linalg.norm(psi_l[0]) == 0.0:
            raise DegenerateFixedPointError(
                "Psi_(1) = 0 on the curve: degenerate component"
            )
        for k in range(2, max_k + 1):
            acc = 0.0
            for l in range(1, k):
                acc += math.comb(k, l) * float(np.dot(psi_l[l - 1], psi_l[k - l - 1]))
            s[k][i] = 0.5 * acc
    if np.any(s[2] <= 0):
        raise DegenerateFixedPointError(
            "s_2 <= 0 somewhere on the curve: non-degeneracy assumption fails"
        )
    return CurveLocalData(s=s, kappa=comp.kappa.copy())


def curve_brackets_closed(s2_inv, s, kappa):
    """Closed-form bracket factors of a_0, a_1, a_2 (without (4 pi s_2)^{-1/2}).

    Generic over the scalar type: floats, Fractions, or symbolic polynomials.
    `s` maps k to s_k for k = 3..6; `s2_inv` is 1/s_2.
    """
    s3, s4, s5, s6 = s[3], s[4], s[5], s[6]
    q = s2_inv
    b0 = 1
    b1 = (-s3 * kappa - s4 * Fraction(1, 4)) * q**2 + Fraction(5, 12) * s3**2 * q**3
    b2 = (
        (-s5 * kappa * Fraction(1, 2) - s6 * Fraction(1, 12)) * q**3
        + (
            Fraction(35, 12) * s3 * s4 * kappa
            + Fraction(7, 12) * s3 * s5
            + Fraction(35, 96) * s4**2
        )
        * q**4
        + (-Fraction(35, 12) * s3**3 * kappa - Fraction(35, 16) * s3**2 * s4) * q**5
        + Fraction(385, 288) * s3**4 * q**6
    )
    return [b0, b1, b2]


def curve_brackets_engine(s2_inv, s, kappa, order: int = 2):
    """Same brackets through the generic expansion engine (1-D route)."""
    cut = 2 * order
    tail = GradedSeries()
    for k in range(1, cut + 1):
        if k + 2 in s:
            c, tens = tilde(SymTensor(1, k + 2, {(0,) * (k + 2): s[k + 2]}))
            tail.add_term(k, Fraction(1, 2) * c, tens)
    pre = GradedSeries.one()
    pre.add_term(1, kappa, (SymTensor(1, 1, {(0,): 1}),))
    series = tail.exp_negative(cut).mul(pre, cut)
    q = Bilinear(np.array([[s2_inv]], dtype=object))
    return [normalized_average(series.coefficient(2 * k), q) for k in range(order + 1)]


def curve_coefficients(data: CurveLocalData, order: int = 2) -> np.ndarray:
    """Per-sample a_0..a_order; a_k = (4 pi s_2)^{-1/2} bracket_k."""
    n = len(data.kappa)
    out = np.empty((order + 1, n))
    for i in range(n):
        s = {k: data.s[k][i] for k in data.s}
        s2 = s.pop(2)
        brackets = curve_brackets_closed(1.0 / s2, s, data.kappa[i])
        lead = 1.0 / math.sqrt(4 * math.pi * s2)
        for k in range(order + 1):
            out[k, i] = lead * float(brackets[k])
    return out


def integrate_over_curve(comp: ClosedCurve, values) -> float:
    """Trapezoid rule over arclength on the closed polyline."""
    pts = comp.points
    v = np.asarray(values, dtype=float)
    if comp.closed:
        nxt = np.roll(pts, -1, axis=0)
        seg = np.linalg.norm(nxt - pts, axis=1)
        vn = np.roll(v, -1)
        return float(np.sum(0.5 * (v + vn) * seg))
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    return float(np.sum(0.5 * (v[1:] + v[:-1]) * seg))


# -- point components ----------------------------------------------------------


def point_S_derivatives(m: SmoothMap, x0, max_order: int = 6) -> PhaseJet:
    """Symmetrized derivatives S_(2..max_order) of S at a fixed point.

    S_(k) = (1/2) sum_{l=1}^{k-1} C(k, l) Psi_(l) v Psi_(k-l), summed over the
    component index of Psi = Phi - id (flat metric).
    """
    psi = m.psi_tensors(np.asarray(x0, dtype=float), max_order - 1)
    s: dict = {}
    for k in range(2, max_order + 1):
        acc = SymTensor.zero(2, k)
        for l in range(1, k):
            coeff = Fraction(math.comb(k, l), 2)
            for mu in range(2):
                acc = acc + sym_product(psi[mu][l], psi[mu][k - l]).scale(coeff)
        s[k] = acc
    phase = PhaseJet(2, s)
    _chol_or_raise(phase.s2_matrix().astype(float))
    return phase


def point_S_derivatives_exact(psi_tensors: list[dict], max_order: int = 6) -> PhaseJet:
    """Exact-rational variant consuming prebuilt Psi tensors (tests, reductions)."""
    dim = 2
    s: dict = {}
    for k in range(2, max_order + 1):
        acc = SymTensor.zero(dim, k)
        for l in range(1, k):
            coeff = Fraction(math.comb(k, l), 2)
            for mu in range(dim):
                if l in psi_tensors[mu] and (k - l) in psi_tensors[mu]:
                    acc = acc + sym_product(
                        psi_tensors[mu][l], psi_tensors[mu][k - l]
                    ).scale(coeff)
        s[k] = acc
    return PhaseJet(dim, s)


def _phase_dense(phase: PhaseJet, exact: bool):
    dtype = object if exact else float
    return {k: t.todense(dtype=dtype) for k, t in phase.s.items()}


def point_coefficients(phase: PhaseJet, order: int = 2):
    """A_0..A_order of the point expansion, symmetrization-free closed form.

    Every term is an explicit Q-contraction of S_(3..6); exact inputs give
    exact rational outputs (with sqrt(det Q) exact whenever it is rational).
    """
    if order > 2:
        raise ValueError("closed forms are available up to order 2")
    m = phase.s2_matrix()
    exact = all(isinstance(v, (int, Fraction)) for v in m.flat)
    _chol_or_raise(m.astype(float))
    if exact:
        q = exact_inverse(m)
        detq = Fraction(1) / exact_det(m)
        num, den = detq.numerator, detq.denominator
        rn, rd = math.isqrt(num), math.isqrt(den)
        sqrt_detq = Fraction(rn, rd) if (rn * rn == num and rd * rd == den) else math.sqrt(num / den)
    else:
        q = np.linalg.inv(m.astype(float))
        sqrt_detq = 1.0 / math.sqrt(float(np.linalg.det(m.astype(float))))
    dense = _phase_dense(phase, exact)
    e = _E(exact)

    out = [sqrt_detq]
    if order >= 1:
        s3, s4 = dense[3], dense[4]
        t3 = e("ab,abc->c", q, s3)  # S_[2]nu
        a1 = (
            -_f(1, 4) * e("ab,cd,abcd->", q, q, s4)
            + _f(1, 4) * e("a,b,ab->", t3, t3, q)
            + _f(1, 6) * e("abc,def,ad,be,cf->", s3, s3, q, q, q)
        )
        out.append(sqrt_detq * a1)
    if order >= 2:
        s3, s4, s5, s6 = dense[3], dense[4], dense[5], dense[6]
        t3 = e("ab,abc->c", q, s3)  # tau S3, rank 1
        t4 = e("ab,abcd->cd", q, s4)  # tau S4, rank 2
        t5_1 = e("ab,cd,abcde->e", q, q, s5)  # tau^2 S5, rank 1
        t5_3 = e("ab,abcde->cde", q, s5)  # tau S5, rank 3
        s4full = e("ab,cd,abcd->", q, q, s4)  # S_[4]
        a2 = (
            -_f(1, 12) * e("ab,cd,ef,abcdef->", q, q, q, s6)
            + _f(1, 4) * e("a,b,ab->", t3, t5_1, q)
            + _f(1, 3) * e("abc,def,ad,be,cf->", s3, t5_3, q, q, q)
            + _f(1, 32) * s4full * s4full
            + _f(1, 4) * e("ab,cd,ac,bd->", t4, t4, q, q)
            + _f(1, 12) * e("abcd,efgh,ae,bf,cg,dh->", s4, s4, q, q, q, q)
            - _f(1, 16) * e("a,b,ab->", t3, t3, q) * s4full
            - _f(1, 2) * e("a,bcd,ef,ab,ce,df->", t3, s3, t4, q, q, q)
            - _f(1, 4) * e("a,b,cd,ac,bd->", t3, t3, t4, q, q)
            - _f(1, 3) * e("a,bcd,efgh,ae,bf,cg,dh->", t3, s3, s4, q, q, q, q)
            - _f(1, 24) * e("abc,def,ad,be,cf->", s3, s3, q, q, q) * s4full
            - _f(1, 2) * e("abc,def,gh,ad,be,cg,fh->", s3, s3, t4, q, q, q, q)
            - _f(1, 2)
            * e("abc,def,ghij,ad,bg,ch,ei,fj->", s3, s3, s4, q, q, q, q, q)
            + _f(1, 32) * e("a,b,ab->", t3, t3, q) * e("c,d,cd->", t3, t3, q)
            + _f(1, 24)
            * e("a,b,ab->", t3, t3, q)
            * e("cde,fgh,cf,dg,eh->", s3, s3, q, q, q)
            + _f(1, 4)
            * e("a,bcd,efg,h,ab,ce,df,gh->", t3, s3, s3, t3, q, q, q, q)
            + _f(1, 12) * e("a,bcd,e,f,ab,ce,df->", t3, s3, t3, t3, q, q, q)
            + _f(1, 2)
            * e("a,bcd,efg,hij,ab,ce,dh,fi,gj->", t3, s3, s3, s3, q, q, q, q, q)
            + _f(1, 72)
            * e("abc,def,ad,be,cf->", s3, s3, q, q, q) ** 2
            + _f(1, 4)
            * e(
                "abc,def,ghi,jkl,ad,be,cg,fj,hk,il->",
                s3, s3, s3, s3, q, q, q, q, q, q,
            )
            + _f(1, 6)
            * e(
                "abc,def,ghi,jkl,ad,bg,cj,eh,fk,il->",
                s3, s3, s3, s3, q, q, q, q, q, q,
            )
        )
        out.append(sqrt_detq * a2)
    return out


def _f(a, b):
    return Fraction(a, b)


def _E(exact: bool):
    def ein(expr, *ops):
        res = np.einsum(expr, *ops, optimize=True)
        if isinstance(res, np.ndarray) and res.ndim == 0:
            res = res.item()
        if not exact and np.isscalar(res):
            return float(res)
        return res

    return ein


def point_coefficients_via_engine(phase: PhaseJet, order: int = 2) -> ExpansionResult:
    """Generic-engine route for the same coefficients (two-path check)."""
    from .laplace import expand

    return expand(phase, PrefactorJet.unit(), order)


# -- whole-map analysis ----------------------------------------------------------


@dataclass
class PointComponentResult:
    location: tuple
    coefficients: list  # A_0..A_order, powers t^0, t^1, ...
    det_i_minus_dphi: float


@dataclass
class CurveComponentResult:
    curve: ClosedCurve
    local: CurveLocalData
    densities: np.ndarray  # (order+1, N) per-sample a_k
    coefficients: list  # integrated A_k, powers t^{-1/2 + k}
    refinement_rel_change: float


@dataclass
class FlatAnalysis:
    points: list
    curves: list
    ladder: dict = field(default_factory=dict)  # {exponent (Fraction): coefficient}

    def prediction(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for ex, c in self.ladder.items():
            out = out + c * t ** float(ex)
        return out


def analyze(
    m: SmoothMap,
    seeds,
    order: int = 2,
    curve_samples: int = 256,
    refine_tol: float = 1e-8,
) -> FlatAnalysis:
    roots, failures = find_fixed_points(m, seeds)
    points, curves = [], []
    consumed_by_curve: list[ClosedCurve] = []
    for root in roots:
        if any(
            np.min(np.linalg.norm(c.points - root, axis=1)) < 1e-6
            for c in consumed_by_curve
        ):
            continue
        kind = classify_fixed_point(m, root)
        if kind == "point":
            phase = point_S_derivatives(m, root, max_order=2 * order + 2)
            coeffs = [float(c) for c in point_coefficients(phase, order)]
            a = np.eye(2) - m.dphi(root)
            points.append(
                PointComponentResult(tuple(root), coeffs, float(np.linalg.det(a)))
            )
        else:
            result = _curve_component(m, root, order, curve_samples, refine_tol)
            consumed_by_curve.append(result.curve)
            curves.append(result)
    ladder: dict = {}
    for p in points:
        for k, c in enumerate(p.coefficients):
            ex = Fraction(k)
            ladder[ex] = ladder.get(ex, 0.0) + c
    for c in curves:
        for k, a in enumerate(c.coefficients):
            ex = Fraction(2 * k - 1, 2)
            ladder[ex] = ladder.get(ex, 0.0) + a
    return FlatAnalysis(points, curves, ladder)


def _curve_component(m, root, order, samples, refine_tol) -> CurveComponentResult:
    # trapezoid over chords has an O(h^2) bias; Richardson on doubling
    # removes it, and refinement continues until the extrapolant settles
    prev_raw = None
    prev_extr = None
    n = samples
    while True:
        curve = trace_curve(m, root, samples=n)
        local = curve_s_coefficients(m, curve, max_k=2 * order + 2)
        dens = curve_coefficients(local, order)
        raw = [integrate_over_curve(curve, dens[k]) for k in range(order + 1)]
        if prev_raw is not None:
            extr = [(4 * b - a) / 3 for a, b in zip(prev_raw, raw)]
            if prev_extr is not None:
                rel = max(
                    abs(a - b) / max(1e-300, abs(a))
                    for a, b in zip(extr, prev_extr)
                )
                if rel <= refine_tol or n >= 32 * samples:
                    return CurveComponentResult(curve, local, dens, extr, rel)
            prev_extr = extr
        prev_raw = raw
        n *= 2
