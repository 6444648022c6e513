"""Forward-mode truncated multivariate Taylor arithmetic (jets).

A JetValue holds coefficients c_m = (partial^m f / m!) at the expansion
point, for multi-degrees m with |m| <= order.  Arithmetic is exact truncated
series arithmetic in float precision; analytic functions compose through the
nilpotent decomposition u = c + w with w^k truncating at the order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from . import expr as _expr
from .expr import DomainError

MAX_ORDER = 8


@dataclass
class JetValue:
    nvars: int
    order: int
    coeffs: dict  # {exponent tuple: float}

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, value: float, nvars: int, order: int) -> "JetValue":
        _check_order(order)
        return cls(nvars, order, {(0,) * nvars: float(value)})

    @classmethod
    def variable(cls, index: int, value: float, nvars: int, order: int) -> "JetValue":
        _check_order(order)
        lin = tuple(1 if i == index else 0 for i in range(nvars))
        c = {(0,) * nvars: float(value)}
        if order >= 1:
            c[lin] = 1.0
        return cls(nvars, order, c)

    # -- helpers -------------------------------------------------------------

    def value(self) -> float:
        return self.coeffs.get((0,) * self.nvars, 0.0)

    def coefficient(self, exps) -> float:
        return self.coeffs.get(tuple(exps), 0.0)

    def derivative(self, exps) -> float:
        """Mixed partial derivative d^m f for the multi-degree m."""
        exps = tuple(exps)
        fact = 1
        for e in exps:
            fact *= math.factorial(e)
        return self.coeffs.get(exps, 0.0) * fact

    def _zero_key(self):
        return (0,) * self.nvars

    def _compat(self, other: "JetValue"):
        if self.nvars != other.nvars or self.order != other.order:
            raise ValueError("jet shape mismatch")

    # -- ring operations ------------------------------------------------------

    def __add__(self, other):
        other = _as_jet(other, self)
        self._compat(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return JetValue(self.nvars, self.order, out)

    __radd__ = __add__

    def __neg__(self):
        return JetValue(self.nvars, self.order, {k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-_as_jet(other, self))

    def __rsub__(self, other):
        return _as_jet(other, self) + (-self)

    def __mul__(self, other):
        other = _as_jet(other, self)
        self._compat(other)
        out: dict = {}
        for k1, v1 in self.coeffs.items():
            if v1 == 0.0:
                continue
            for k2, v2 in other.coeffs.items():
                if v2 == 0.0:
                    continue
                k = tuple(a + b for a, b in zip(k1, k2))
                if sum(k) > self.order:
                    continue
                out[k] = out.get(k, 0.0) + v1 * v2
        return JetValue(self.nvars, self.order, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * _as_jet(other, self).reciprocal()

    def __rtruediv__(self, other):
        return _as_jet(other, self) * self.reciprocal()

    def __pow__(self, n: int):
        if n < 0:
            return self.reciprocal() ** (-n)
        out = JetValue.constant(1.0, self.nvars, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def reciprocal(self) -> "JetValue":
        c = self.value()
        if c == 0.0:
            raise DomainError("division by a jet with zero value")
        return self.compose_series(
            [(-1.0) ** k / c ** (k + 1) * math.factorial(k) for k in range(self.order + 1)]
        )

    # -- analytic composition --------------------------------------------------

    def compose_series(self, derivatives) -> "JetValue":
        """sum_k derivatives[k]/k! * w^k with w the nilpotent part of self."""
        w = JetValue(
            self.nvars,
            self.order,
            {k: v for k, v in self.coeffs.items() if sum(k) > 0},
        )
        out = JetValue.constant(derivatives[0], self.nvars, self.order)
        wpow = JetValue.constant(1.0, self.nvars, self.order)
        for k in range(1, self.order + 1):
            wpow = wpow * w
            if not wpow.coeffs:
                break
            out = out + wpow * (derivatives[k] / math.factorial(k))
        return out

    def sin(self):
        c = self.value()
        cyc = [math.sin(c), math.cos(c), -math.sin(c), -math.cos(c)]
        return self.compose_series([cyc[k % 4] for k in range(self.order + 1)])

    def cos(self):
        c = self.value()
        cyc = [math.cos(c), -math.sin(c), -math.cos(c), math.sin(c)]
        return self.compose_series([cyc[k % 4] for k in range(self.order + 1)])

    def exp(self):
        e = math.exp(self.value())
        return self.compose_series([e] * (self.order + 1))

    def log(self):
        c = self.value()
        if c <= 0.0:
            raise DomainError("log of a non-positive value")
        ders = [math.log(c)]
        for k in range(1, self.order + 1):
            ders.append((-1.0) ** (k - 1) * math.factorial(k - 1) / c**k)
        return self.compose_series(ders)

    def sqrt(self):
        c = self.value()
        if c <= 0.0:
            raise DomainError("sqrt of a non-positive value")
        ders = [_sqrt_derivative(c, k) for k in range(self.order + 1)]
        return self.compose_series(ders)


def _sqrt_derivative(c: float, k: int) -> float:
    """d^k/dc^k sqrt(c) = (1/2)(1/2 - 1)...(1/2 - k + 1) c^{1/2 - k}."""
    out = math.sqrt(c)
    for j in range(k):
        out *= (0.5 - j) / c
    return out


def _check_order(order: int):
    if order < 0 or order > MAX_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}")


def _as_jet(v, like: JetValue) -> JetValue:
    if isinstance(v, JetValue):
        return v
    return JetValue.constant(float(v), like.nvars, like.order)


_JET_FN = {
    "sin": JetValue.sin,
    "cos": JetValue.cos,
    "exp": JetValue.exp,
    "log": JetValue.log,
    "sqrt": JetValue.sqrt,
}


def jet_eval(node, point, order: int, nvars: int | None = None) -> JetValue:
    """Jet of an expression AST at a point, to the given order."""
    if nvars is None:
        nvars = len(point)
    _check_order(order)

    def rec(n):
        if isinstance(n, _expr.Num):
            return JetValue.constant(float(n.value), nvars, order)
        if isinstance(n, _expr.Var):
            return JetValue.variable(n.index, float(point[n.index]), nvars, order)
        if isinstance(n, _expr.Neg):
            return -rec(n.arg)
        if isinstance(n, _expr.BinOp):
            l, r = rec(n.left), rec(n.right)
            if n.op == "+":
                return l + r
            if n.op == "-":
                return l - r
            if n.op == "*":
                return l * r
            try:
                return l / r
            except DomainError as exc:
                raise DomainError(str(exc).split(" (at")[0], n.offset) from exc
        if isinstance(n, _expr.Pow):
            return rec(n.base) ** n.exponent
        if isinstance(n, _expr.Call):
            try:
                return _JET_FN[n.fn](rec(n.arg))
            except DomainError as exc:
                raise DomainError(str(exc).split(" (at")[0], n.offset) from exc
        raise TypeError(f"not an expression node: {n!r}")

    return rec(node)


def jet_partial(jet: JetValue, axis: int) -> JetValue:
    """Partial derivative of a jet.

    The declared order is kept so that derivative jets stay composable with
    their parents; coefficients of the result are exact only to one order
    less than the input's validity, which callers must track.
    """
    out: dict = {}
    for exps, c in jet.coeffs.items():
        if exps[axis] == 0:
            continue
        lowered = tuple(
            e - 1 if i == axis else e for i, e in enumerate(exps)
        )
        out[lowered] = out.get(lowered, 0.0) + c * exps[axis]
    return JetValue(jet.nvars, jet.order, out)


def derivative_tensor_entries(jet: JetValue, rank: int) -> dict:
    """Entries of the symmetric derivative tensor of a given rank.

    Returns {non-decreasing index tuple: d^rank f / dx_{i1}..dx_{ir}}.
    """
    out = {}
    for idx in itertools.combinations_with_replacement(range(jet.nvars), rank):
        exps = [0] * jet.nvars
        for i in idx:
            exps[i] += 1
        out[idx] = jet.derivative(exps)
    return out
