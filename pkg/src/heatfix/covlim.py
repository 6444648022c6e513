"""Symbolic coincidence-limit algebra for two-point scalars.

Small tensor calculus over the base objects {g, g^{-1}, R, DR, D2R}:
expressions are sums of terms, each a rational coefficient times a product of
indexed factors; repeated labels contract (all base tensors are covariant, so
every contraction routes through an explicit inverse-metric factor).

On top of it: for a two-point scalar u(x, x') whose fully symmetrized
unprimed-derivative limits are known, the non-symmetrized limits follow by
averaging commutator-defect chains over orderings, and the mixed limits by
the prime-commutation rule

    [T_{;a'}] = [T]_{;a} - [T_{;a}] .

The world function (all symmetrized limits of order >= 3 vanish) and the
log-VanVleck function feed from here; the derived tables are symbolic and
geometry-independent, built once and evaluated per geometry.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache

import numpy as np

BASE_RANKS = {"g": 2, "gi": 2, "R": 4, "DR": 5, "D2R": 6}
_DERIVATIVE = {"R": "DR", "DR": "D2R"}


class DerivativeDepthError(RuntimeError):
    pass


def _canon_term(coeff, factors):
    """Canonical form: factors sorted, dummies relabeled in scan order."""
    factors = sorted(factors)
    mapping = {}
    out = []
    for name, idx in factors:
        new = []
        for i in idx:
            if isinstance(i, int) and i < 0:
                if i not in mapping:
                    mapping[i] = -(len(mapping) + 1)
                new.append(mapping[i])
            else:
                new.append(i)
        out.append((name, tuple(new)))
    # second pass so the relabeling is stable under the new ordering
    out.sort()
    mapping = {}
    final = []
    for name, idx in out:
        new = []
        for i in idx:
            if isinstance(i, int) and i < 0:
                if i not in mapping:
                    mapping[i] = -(len(mapping) + 1)
                new.append(mapping[i])
            else:
                new.append(i)
        final.append((name, tuple(new)))
    return coeff, tuple(sorted(final))


class TExpr:
    """Sum of coefficient * product-of-indexed-base-factors.

    Free indices are non-negative integers (slot positions), dummies are
    negative integers appearing exactly twice.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        # terms: dict {factors tuple: Fraction}
        self.terms = {}
        if terms:
            for factors, c in terms.items():
                if c != 0:
                    self.terms[factors] = self.terms.get(factors, Fraction(0)) + c
            self.terms = {f: c for f, c in self.terms.items() if c != 0}

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def term(cls, coeff, factors):
        c, f = _canon_term(Fraction(coeff), factors)
        return cls({f: c})

    def __add__(self, other):
        out = dict(self.terms)
        for f, c in other.terms.items():
            out[f] = out.get(f, Fraction(0)) + c
        return TExpr({f: c for f, c in out.items() if c != 0})

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        c = Fraction(c)
        return TExpr({f: cf * c for f, cf in self.terms.items()})

    def iter_terms(self):
        return self.terms.items()

    def n_free(self):
        labels = set()
        for factors in self.terms:
            for _, idx in factors:
                labels.update(i for i in idx if i >= 0)
        return (max(labels) + 1) if labels else 0

    def relabel_free(self, mapping):
        """Permute/rename free labels: new slot mapping[i] <- old slot i."""
        out = {}
        for factors, c in self.terms.items():
            new_factors = []
            for name, idx in factors:
                new_factors.append(
                    (name, tuple(mapping[i] if (i >= 0) else i for i in idx))
                )
            cc, ff = _canon_term(c, new_factors)
            out[ff] = out.get(ff, Fraction(0)) + cc
        return TExpr(out)

    def nabla(self, new_label):
        """Covariant derivative appending `new_label` to each factor in turn."""
        out = TExpr.zero()
        for factors, c in self.terms.items():
            for i, (name, idx) in enumerate(factors):
                if name in ("g", "gi"):
                    continue
                if name not in _DERIVATIVE:
                    raise DerivativeDepthError(
                        f"third derivative of the curvature required ({name})"
                    )
                dfac = list(factors)
                dfac[i] = (_DERIVATIVE[name], idx + (new_label,))
                out = out + TExpr.term(c, dfac)
        return out

    def sym(self, labels):
        labels = list(labels)
        out = TExpr.zero()
        perms = list(itertools.permutations(labels))
        for p in perms:
            mapping = {}
            for a, b in zip(labels, p):
                mapping[a] = b
            full = {i: mapping.get(i, i) for i in range(self.n_free())}
            out = out + self.relabel_free(full)
        return out.scale(Fraction(1, len(perms)))

    def evaluate(self, geom) -> np.ndarray:
        """Dense ndarray over the free slots for a concrete geometry."""
        nfree = self.n_free()
        n = geom.n
        base = {
            "g": geom.g,
            "gi": geom.g_inv,
            "R": geom.riemann,
            "DR": geom.driemann,
            "D2R": geom.d2riemann,
        }
        total = np.zeros((n,) * nfree)
        letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
        for factors, c in self.terms.items():
            labels = {}
            subs = []
            ops = []
            for name, idx in factors:
                s = ""
                for i in idx:
                    if i not in labels:
                        labels[i] = letters[len(labels)]
                    s += labels[i]
                subs.append(s)
                ops.append(base[name])
            if any(i not in labels for i in range(nfree)):
                raise ValueError("a term does not use all free slots")
            outsub = "".join(labels[i] for i in range(nfree))
            expr = ",".join(subs) + "->" + outsub
            total = total + float(c) * np.einsum(expr, *ops, optimize=True)
        return total


def g_term(a, b):
    return TExpr.term(1, [("g", (a, b))])


_DUMMY = itertools.count(start=1)


def fresh_dummy():
    return -next(_DUMMY)


class ScalarLimitChain:
    """Unprimed and mixed coincidence limits of a two-point scalar u(x, x').

    `sym_limits[k]` is the TExpr of the fully symmetrized k-th unprimed
    limit Sym[u_{;a1..ak}] with free slots 0..k-1.  Defect chains produce the
    ordered limits; the prime rule produces the mixed ones.  All results are
    symbolic and cached.
    """

    def __init__(self, sym_limits: dict, max_order: int):
        self.sym_limits = sym_limits
        self.max_order = max_order
        self._L: dict = {}
        self._M: dict = {}

    # ordered unprimed limit [u_{;a_0 ... a_{k-1}}]
    def unprimed(self, k: int) -> TExpr:
        if k in self._L:
            return self._L[k]
        if k <= 2:
            out = self.sym_limits.get(k, TExpr.zero())
            self._L[k] = out
            return out
        # defect-walk over orderings: N[id] = Sym - mean(Delta)
        deltas = {tuple(range(k)): TExpr.zero()}
        frontier = [tuple(range(k))]
        while frontier:
            nxt = []
            for arr in frontier:
                base = deltas[arr]
                for slot in range(k - 1):
                    new = list(arr)
                    new[slot], new[slot + 1] = new[slot + 1], new[slot]
                    new = tuple(new)
                    if new in deltas:
                        continue
                    defect = self._swap_defect(k, slot, arr)
                    deltas[new] = base - defect
                    nxt.append(new)
            frontier = nxt
        mean = TExpr.zero()
        for d in deltas.values():
            mean = mean + d
        mean = mean.scale(Fraction(1, len(deltas)))
        out = self.sym_limits.get(k, TExpr.zero()) - mean
        self._L[k] = out
        return out

    def _swap_defect(self, k: int, slot: int, arr) -> TExpr:
        """[u_{; arr-order}] - [u_{; arr-with-slot,slot+1-swapped}].

        For a scalar, swapping derivative slots (i, i+1) (0-based `slot`)
        commutes unless slot >= 1; the commutator hits each earlier index:

            -sum_j R^m_{a_j a_{i+1} a_i} (nabla^{i-1} u)_{a_1 .. m .. }

        and the remaining derivatives distribute by Leibniz before the limit.
        """
        if slot == 0:
            return TExpr.zero()
        i = slot  # 0-based position of the first swapped derivative
        labels = list(arr)
        trailing = labels[i + 2 :]
        head = labels[:i]
        y, z = labels[i], labels[i + 1]
        out = TExpr.zero()
        for j in range(len(head)):
            # base correction: -R^m_{head_j, z, y} (nabla^i u)_{head with m at j},
            # with the trailing derivatives Leibniz-distributed before the limit
            for r_idx, u_idx in _ordered_splits(trailing):
                inner = self.unprimed(i + len(u_idx))
                if not inner.terms:
                    continue
                core_d = fresh_dummy()
                pair_d = fresh_dummy()
                rsym = "R"
                ridx = (pair_d, head[j], z, y)
                for lab in r_idx:
                    if rsym not in _DERIVATIVE:
                        raise DerivativeDepthError("curvature derivative too deep")
                    rsym = _DERIVATIVE[rsym]
                    ridx = ridx + (lab,)
                slot_labels = head[:j] + [core_d] + head[j + 1 :] + list(u_idx)
                for c, factors in _instantiate_raw(inner, slot_labels):
                    fac = list(factors) + [("gi", (core_d, pair_d)), (rsym, ridx)]
                    out = out + TExpr.term(-c, fac)
        return out

    # mixed limit [u_{; a_0..a_{k-1} b_0'..b_{l-1}'}]:
    # free slots 0..k-1 unprimed (application order), then k..k+l-1 primed
    def mixed(self, k: int, l: int) -> TExpr:
        key = (k, l)
        if key in self._M:
            return self._M[key]
        if l == 0:
            out = self.unprimed(k)
        else:
            # T = u_{; a_0..a_{k-1} b_0'..b_{l-2}'}; new prime at slot k+l-1
            prev = self.mixed(k, l - 1)
            nu = k + l - 1
            grad = prev.nabla(nu)
            # [T_{;nu}] with nu unprimed applied after: commute across primes,
            # giving the (k+1, l-1) mixed limit with nu as last unprimed
            base = self.mixed(k + 1, l - 1)
            # base slots: unprimed 0..k (order a_0..a_{k-1}, nu), primed k+1..k+l-1
            mapping = {}
            for s in range(k):
                mapping[s] = s
            mapping[k] = nu  # the appended unprimed index
            for s in range(l - 1):
                mapping[k + 1 + s] = k + s
            moved = base.relabel_free(
                {i: mapping.get(i, i) for i in range(base.n_free())}
            )
            out = grad - moved
        self._M[key] = out
        return out


def _instantiate_raw(expr: TExpr, slot_labels):
    """Replace free slots 0..r-1 by the given labels (ints or dummies).

    Yields raw (coeff, factors) pairs WITHOUT canonicalization so that the
    substituted dummy labels keep their identity for further joining.
    """
    for factors, c in expr.terms.items():
        remap = {}
        new_factors = []
        for name, idx in factors:
            new = []
            for i in idx:
                if i >= 0:
                    new.append(slot_labels[i])
                else:
                    if i not in remap:
                        remap[i] = fresh_dummy()
                    new.append(remap[i])
            new_factors.append((name, tuple(new)))
        yield c, new_factors


def _ordered_splits(labels):
    """All ways to split an ordered label list into two ordered sublists."""
    n = len(labels)
    for mask in range(1 << n):
        left = tuple(labels[i] for i in range(n) if mask >> i & 1)
        right = tuple(labels[i] for i in range(n) if not mask >> i & 1)
        yield left, right


# -- concrete chains -----------------------------------------------------------


@lru_cache(maxsize=None)
def sigma_chain(max_order: int = 6) -> ScalarLimitChain:
    """World-function chain: Sym-limits are g at order 2, zero otherwise."""
    sym_limits = {2: g_term(0, 1)}
    return ScalarLimitChain(sym_limits, max_order)


def _ricci_expr(a, b) -> TExpr:
    d1, d2 = fresh_dummy(), fresh_dummy()
    return TExpr.term(1, [("gi", (d1, d2)), ("R", (d1, a, d2, b))])


@lru_cache(maxsize=None)
def zeta_chain(max_order: int = 4) -> ScalarLimitChain:
    """log-VanVleck chain: symmetrized limits through fourth order."""
    z2 = _ricci_expr(0, 1).scale(Fraction(1, 6))
    z3 = _ricci_expr(0, 1).nabla(2).sym((0, 1, 2)).scale(Fraction(1, 4))
    rr = TExpr.zero()
    d = [fresh_dummy() for _ in range(4)]
    rr = TExpr.term(
        Fraction(1, 15),
        [
            ("gi", (d[0], d[1])),
            ("gi", (d[2], d[3])),
            ("R", (d[0], 0, d[2], 1)),
            ("R", (d[1], 2, d[3], 3)),
        ],
    )
    z4 = (
        _ricci_expr(0, 1).nabla(2).nabla(3).scale(Fraction(3, 10)) + rr
    ).sym((0, 1, 2, 3))
    return ScalarLimitChain({2: z2, 3: z3, 4: z4}, max_order)
