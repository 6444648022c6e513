"""Contraction multigraphs and symmetrization-free Gaussian contraction.

The full contraction tau^N(A1 v ... v Ak) of symmetric tensors with a
symmetric (2,0)-tensor Q expands over multigraphs: vertices are the tensor
factors, edges are Q-pairings.  Each admissible adjacency matrix Gamma gets
an exact rational weight

    c(Gamma) = n! / ((|n|-1)!! * prod_{i<j} gamma_ij! * prod_i gamma_ii!!)

and the weights of all graphs sum to 1.  `brute_force_contraction` is the
independent oracle: it averages the raw pairing expansion without ever using
the weight formula.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .tensor import (
    Bilinear,
    CapacityError,
    SymTensor,
    double_factorial,
    multi_index_factorial,
)

BRUTE_FORCE_RANK_CAP = 8


class OddTotalRankError(ValueError):
    """|n| odd: the contraction vanishes identically."""


@dataclass(frozen=True)
class ContractionGraph:
    """Adjacency matrix gamma_ij of a contraction multigraph."""

    adjacency: tuple  # tuple of tuples of ints

    def __post_init__(self):
        a = self.adjacency
        k = len(a)
        for i in range(k):
            if len(a[i]) != k:
                raise ValueError("adjacency matrix must be square")
            if a[i][i] % 2 != 0:
                raise ValueError(f"diagonal entry gamma[{i}][{i}] must be even")
            for j in range(k):
                if a[i][j] < 0:
                    raise ValueError("adjacency entries must be non-negative")
                if a[i][j] != a[j][i]:
                    raise ValueError("adjacency matrix must be symmetric")

    @property
    def order(self) -> int:
        return len(self.adjacency)

    def row_sums(self) -> tuple:
        return tuple(sum(row) for row in self.adjacency)

    def flat(self) -> tuple:
        return tuple(v for row in self.adjacency for v in row)


@dataclass
class WeightedGraphSet:
    """Graphs of G(n) with their exact weights; weights sum to 1."""

    ranks: tuple
    graphs: list  # list of (ContractionGraph, Fraction)

    def total_weight(self) -> Fraction:
        return sum((w for _, w in self.graphs), Fraction(0))


def graph_weight(ranks, graph: ContractionGraph) -> Fraction:
    total = sum(ranks)
    num = multi_index_factorial(ranks)
    den = double_factorial(total - 1)
    a = graph.adjacency
    k = len(a)
    for i in range(k):
        den *= double_factorial(a[i][i])
        for j in range(i + 1, k):
            den *= math.factorial(a[i][j])
    return Fraction(num, den)


def enumerate_graphs(ranks) -> WeightedGraphSet:
    """All adjacency matrices of G(n), sorted in decreasing row-wise
    lexicographic order, each with its weight."""
    ranks = tuple(int(r) for r in ranks)
    if any(r < 0 for r in ranks):
        raise ValueError("ranks must be non-negative")
    total = sum(ranks)
    if total % 2 != 0:
        raise OddTotalRankError(f"|n| = {total} is odd; contraction vanishes")
    if total > 16:
        raise CapacityError(f"|n| = {total} exceeds enumeration cap 16")
    k = len(ranks)
    matrices = []
    work = [[0] * k for _ in range(k)]

    def fill_row(i: int):
        if i == k:
            matrices.append(tuple(tuple(row) for row in work))
            return
        fixed = sum(work[i][j] for j in range(i))
        remaining = ranks[i] - fixed
        if remaining < 0:
            return
        slots = list(range(i, k))
        caps = []
        for j in slots:
            if j == i:
                caps.append(remaining)
            else:
                caps.append(ranks[j] - sum(work[j][l] for l in range(i)))

        def fill_slot(s: int, left: int):
            if s == len(slots):
                if left == 0:
                    fill_row(i + 1)
                return
            j = slots[s]
            lo = 0
            hi = min(left, max(caps[s], 0))
            for v in range(lo, hi + 1):
                if j == i and v % 2 != 0:
                    continue
                work[i][j] = v
                work[j][i] = v
                fill_slot(s + 1, left - v)
            work[i][j] = 0
            work[j][i] = 0

        fill_slot(0, remaining)

    fill_row(0)
    matrices.sort(key=lambda m: tuple(v for row in m for v in row), reverse=True)
    graphs = [ContractionGraph(m) for m in matrices]
    out = WeightedGraphSet(ranks, [(g, graph_weight(ranks, g)) for g in graphs])
    assert out.total_weight() == 1, "graph weights must sum to 1"
    return out


def merge_equal_factors(wgs: WeightedGraphSet, equality_classes) -> WeightedGraphSet:
    """Merge graphs related by permuting factor positions within a class.

    `equality_classes` is a partition of 0..k-1 (list of lists).  Ranks must
    agree within each class.  The representative of each orbit is its first
    member in the input order; merged weight is the orbit's weight sum.
    """
    k = len(wgs.ranks)
    seen = sorted(i for cls in equality_classes for i in cls)
    if seen != list(range(k)):
        raise ValueError("equality classes must partition the factor positions")
    for cls in equality_classes:
        if len({wgs.ranks[i] for i in cls}) > 1:
            raise ValueError(f"factors {cls} have unequal ranks and cannot be merged")

    perms = []
    for assignment in itertools.product(
        *(itertools.permutations(cls) for cls in equality_classes)
    ):
        perm = list(range(k))
        for cls, img in zip(equality_classes, assignment):
            for src, dst in zip(cls, img):
                perm[src] = dst
        perms.append(tuple(perm))

    def orbit_key(adj):
        best = None
        for p in perms:
            m = tuple(tuple(adj[p[i]][p[j]] for j in range(k)) for i in range(k))
            f = tuple(v for row in m for v in row)
            if best is None or f > best:
                best = f
        return best

    merged: dict = {}
    order: list = []
    for g, w in wgs.graphs:
        key = orbit_key(g.adjacency)
        if key in merged:
            rep, acc = merged[key]
            merged[key] = (rep, acc + w)
        else:
            merged[key] = (g, w)
            order.append(key)
    return WeightedGraphSet(wgs.ranks, [merged[key] for key in order])


# -- evaluation -------------------------------------------------------------

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def _all_exact(tensors, q: Bilinear) -> bool:
    from .tensor import _exact_value

    for t in tensors:
        if not all(_exact_value(v) for v in t.data.values()):
            return False
    return all(_exact_value(v) for v in q.entries.flat)


def _dense_operands(tensors, q: Bilinear, exact: bool):
    dtype = object if exact else float
    arrs = [t.todense(dtype=dtype) for t in tensors]
    qm = q.entries if exact else q.entries.astype(float)
    return arrs, qm


def _contract_pairs(arrs, qm, pairs, slot_offsets):
    """einsum of tensor operands with one Q per slot pair; returns a scalar."""
    nslots = slot_offsets[-1]
    labels = [None] * nslots
    operands = []
    subs = []
    next_label = 0
    for (a, b) in pairs:
        labels[a] = _LETTERS[next_label]
        labels[b] = _LETTERS[next_label + 1]
        operands.append(qm)
        subs.append(_LETTERS[next_label] + _LETTERS[next_label + 1])
        next_label += 2
    for ti, arr in enumerate(arrs):
        lo, hi = slot_offsets[ti], slot_offsets[ti + 1]
        if hi == lo:
            continue
        operands.append(arr)
        subs.append("".join(labels[lo:hi]))
    if not operands:
        return 1
    expr = ",".join(subs) + "->"
    res = np.einsum(expr, *operands, optimize=True)
    if isinstance(res, np.ndarray):
        res = res.item()
    return res


def _scalar_product(tensors):
    out = 1
    for t in tensors:
        out = out * t.data.get((), 0)
    return out


def _graph_pairs(graph: ContractionGraph, slot_offsets):
    """Assign Q-pairings of concrete slots realizing the graph's edges."""
    k = graph.order
    cursor = list(slot_offsets[:-1])
    pairs = []
    a = graph.adjacency
    for i in range(k):
        for _ in range(a[i][i] // 2):
            pairs.append((cursor[i], cursor[i] + 1))
            cursor[i] += 2
        for j in range(i + 1, k):
            for _ in range(a[i][j]):
                pairs.append((cursor[i], cursor[j]))
                cursor[i] += 1
                cursor[j] += 1
    return pairs


def evaluate_contraction(tensors, q: Bilinear, graphs: WeightedGraphSet | None = None):
    """tau^N(A1 v ... v Ak) as sum_Gamma c(Gamma) T(Gamma).

    Returns exact scalars when all inputs are exact.  An odd total rank
    contracts to zero (the symmetrized product of odd rank has no full
    pairing); that zero is returned directly.
    """
    tensors = list(tensors)
    if not tensors:
        return 1
    dim = tensors[0].dim
    for t in tensors:
        if t.dim != dim or q.dim != dim:
            raise ValueError("all tensors and Q must share one dimension")
    scalar = _scalar_product([t for t in tensors if t.rank == 0])
    tensors = [t for t in tensors if t.rank > 0]
    ranks = tuple(t.rank for t in tensors)
    total = sum(ranks)
    if total % 2 != 0:
        return 0
    if total == 0:
        return scalar
    if graphs is None:
        graphs = enumerate_graphs(ranks)
    elif graphs.ranks != ranks:
        raise ValueError("precomputed graph set does not match tensor ranks")
    exact = _all_exact(tensors, q)
    arrs, qm = _dense_operands(tensors, q, exact)
    offsets = [0]
    for r in ranks:
        offsets.append(offsets[-1] + r)
    acc = 0
    for g, w in graphs.graphs:
        term = _contract_pairs(arrs, qm, _graph_pairs(g, offsets), offsets)
        if exact:
            acc = acc + w * term
        else:
            acc = acc + float(w) * term
    return scalar * acc


def _pairings(slots):
    """All perfect matchings of the slot list."""
    if not slots:
        yield []
        return
    first = slots[0]
    for i in range(1, len(slots)):
        rest = slots[1:i] + slots[i + 1 :]
        for sub in _pairings(rest):
            yield [(first, slots[i])] + sub


def brute_force_contraction(tensors, q: Bilinear):
    """Literal average of the raw pairing expansion: the anti-drift oracle.

    Averages T over every pairing of the 2N index slots (each permutation
    class contributes one pairing; the average over S_2N collapses to the
    pairing average).  Never consults graph weights.
    """
    tensors = list(tensors)
    if not tensors:
        return 1
    scalar = _scalar_product([t for t in tensors if t.rank == 0])
    tensors = [t for t in tensors if t.rank > 0]
    ranks = tuple(t.rank for t in tensors)
    total = sum(ranks)
    if total > BRUTE_FORCE_RANK_CAP:
        raise CapacityError(
            f"brute force caps at |n| = {BRUTE_FORCE_RANK_CAP}, got {total}"
        )
    if total % 2 != 0:
        return 0
    if total == 0:
        return scalar
    exact = _all_exact(tensors, q)
    arrs, qm = _dense_operands(tensors, q, exact)
    offsets = [0]
    for r in ranks:
        offsets.append(offsets[-1] + r)
    acc = 0
    count = 0
    for pairing in _pairings(list(range(total))):
        acc = acc + _contract_pairs(arrs, qm, pairing, offsets)
        count += 1
    assert count == double_factorial(total - 1)
    if exact:
        return scalar * acc * Fraction(1, count)
    return scalar * acc / count
