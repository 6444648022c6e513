"""Dense symmetric covariant tensors with canonical sorted-index storage.

A rank-r symmetric tensor in dimension n keeps one value per non-decreasing
index tuple (its canonical representative), so reading any permutation of an
index returns the same stored value.  All operations are generic over the
scalar type: exact Fractions (or small symbolic polynomials) on the algebraic
paths, floats on the numeric paths.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np

RANK_CAP = 12
DIM_CAP = 8


class CapacityError(ValueError):
    """Raised when a requested rank/dimension exceeds the supported caps."""


def multi_index_order(n) -> int:
    """|n| = n_1 + ... + n_k of a multi-index."""
    return sum(n)

def multi_index_factorial(n) -> int:
    """n! = n_1! ... n_k!, exact."""
    out = 1
    for ni in n:
        out *= math.factorial(ni)
    return out

def double_factorial(n: int) -> int:
    """n!! with the conventions (-1)!! = 0!! = 1."""
    if n <= 0:
        return 1
    out = 1
    while n > 0:
        out *= n
        n -= 2
    return out


def canonical(idx) -> tuple:
    return tuple(sorted(idx))


def _check_caps(dim: int, rank: int):
    if dim < 1 or dim > DIM_CAP:
        raise CapacityError(f"dimension {dim} outside supported range 1..{DIM_CAP}")
    if rank < 0 or rank > RANK_CAP:
        raise CapacityError(f"rank {rank} outside supported range 0..{RANK_CAP}")


def canonical_indices(dim: int, rank: int):
    """All non-decreasing index tuples of length `rank` over 0..dim-1."""
    return itertools.combinations_with_replacement(range(dim), rank)


def index_multiplicity(idx) -> int:
    """Number of distinct permutations of the index tuple."""
    counts = Counter(idx)
    out = math.factorial(len(idx))
    for c in counts.values():
        out //= math.factorial(c)
    return out


class SymTensor:
    """Fully symmetric (0, rank)-tensor, canonical storage.

    `data` maps non-decreasing index tuples to scalars; missing keys are 0.
    Rank 0 is a scalar (key = ()).
    """

    __slots__ = ("dim", "rank", "data")

    def __init__(self, dim: int, rank: int, data: dict | None = None):
        _check_caps(dim, rank)
        self.dim = dim
        self.rank = rank
        self.data = {} if data is None else dict(data)

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, dim: int, rank: int) -> "SymTensor":
        return cls(dim, rank)

    @classmethod
    def scalar(cls, dim: int, value) -> "SymTensor":
        return cls(dim, 0, {(): value})

    @classmethod
    def from_vector(cls, v) -> "SymTensor":
        return cls(len(v), 1, {(i,): v[i] for i in range(len(v))})

    @classmethod
    def from_dense(cls, arr: np.ndarray) -> "SymTensor":
        """Adopt an already-symmetric dense array (no symmetrization)."""
        rank = arr.ndim
        dim = arr.shape[0] if rank else 1
        t = cls(dim if rank else 1, rank)
        if rank == 0:
            t.data[()] = arr[()]
            return t
        for idx in canonical_indices(dim, rank):
            v = arr[idx]
            if _nonzero(v):
                t.data[idx] = v
        return t

    # -- access ------------------------------------------------------------

    def __getitem__(self, idx):
        if self.rank == 0:
            return self.data.get((), 0)
        return self.data.get(canonical(idx), 0)

    def __setitem__(self, idx, value):
        self.data[canonical(idx)] = value

    def items(self):
        """(canonical index, value) pairs for stored (possibly zero) entries."""
        return self.data.items()

    def todense(self, dtype=object) -> np.ndarray:
        arr = np.zeros((self.dim,) * self.rank, dtype=dtype)
        if dtype is object:
            arr[...] = 0
        if self.rank == 0:
            arr[()] = self.data.get((), 0)
            return arr
        for idx, v in self.data.items():
            for perm in set(itertools.permutations(idx)):
                arr[perm] = v
        return arr

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._compat(other)
        out = SymTensor(self.dim, self.rank, self.data)
        for idx, v in other.data.items():
            out.data[idx] = out.data.get(idx, 0) + v
        return out

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        return self + other.scale(-1)

    def scale(self, c) -> "SymTensor":
        return SymTensor(self.dim, self.rank, {i: c * v for i, v in self.data.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymTensor):
            return NotImplemented
        if (self.dim, self.rank) != (other.dim, other.rank):
            return False
        keys = set(self.data) | set(other.data)
        return all(self.data.get(k, 0) == other.data.get(k, 0) for k in keys)

    def __hash__(self):
        return hash((self.dim, self.rank, tuple(sorted(self.data.items(), key=lambda kv: kv[0]))))

    def allclose(self, other: "SymTensor", rtol=1e-12, atol=1e-12) -> bool:
        self._compat(other)
        keys = set(self.data) | set(other.data)
        for k in keys:
            a, b = float(self.data.get(k, 0)), float(other.data.get(k, 0))
            if abs(a - b) > atol + rtol * max(abs(a), abs(b)):
                return False
        return True

    def _compat(self, other: "SymTensor"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if self.rank != other.rank:
            raise ValueError(f"rank mismatch: {self.rank} vs {other.rank}")

    def __repr__(self):
        return f"SymTensor(dim={self.dim}, rank={self.rank}, {len(self.data)} stored)"


class Bilinear:
    """Symmetric (2,0)-tensor Q^{ab}; the contraction/covariance object."""

    __slots__ = ("dim", "entries")

    def __init__(self, entries):
        m = np.asarray(entries, dtype=object)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Bilinear needs a square matrix")
        exact = all(_exact_value(v) for v in m.flat)
        for i in range(m.shape[0]):
            for j in range(i):
                a, b = m[i, j], m[j, i]
                if exact:
                    if a != b:
                        raise ValueError("Bilinear must be symmetric")
                else:
                    fa, fb = float(a), float(b)
                    if abs(fa - fb) > 1e-12 * max(1.0, abs(fa), abs(fb)):
                        raise ValueError("Bilinear must be symmetric")
                    m[i, j] = m[j, i] = 0.5 * (fa + fb)
        self.dim = m.shape[0]
        self.entries = m

    @classmethod
    def identity(cls, dim: int) -> "Bilinear":
        m = np.empty((dim, dim), dtype=object)
        m[...] = 0
        for i in range(dim):
            m[i, i] = 1
        return cls(m)

    def __getitem__(self, ij):
        return self.entries[ij]

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.entries.astype(float))
            return True
        except np.linalg.LinAlgError:
            return False


def symmetrize(arr, rank_cap: int = RANK_CAP) -> SymTensor:
    """Sym(T): average of T over all index permutations, as a SymTensor.

    Accepts a dense ndarray (object or float).  The permutation loop is
    factorial in the rank, hence the capacity cap.
    """
    arr = np.asarray(arr)
    rank = arr.ndim
    if rank > rank_cap:
        raise CapacityError(f"symmetrize: rank {rank} exceeds cap {rank_cap}")
    if rank == 0:
        return SymTensor(1, 0, {(): arr[()]})
    dim = arr.shape[0]
    _check_caps(dim, rank)
    fact = math.factorial(rank)
    out = SymTensor(dim, rank)
    frac = isinstance(arr.flat[0], (int, Fraction)) or arr.dtype == object
    for idx in canonical_indices(dim, rank):
        acc = 0
        nperm = 0
        for perm in set(itertools.permutations(idx)):
            acc = acc + arr[perm]
            nperm += 1
        # each distinct permutation occurs fact/nperm times in the full sum
        if frac:
            v = acc * Fraction(fact // nperm, fact)
        else:
            v = acc * (fact // nperm) / fact
        if _nonzero(v):
            out.data[idx] = v
    return out


def sym_product(a: SymTensor, b: SymTensor) -> SymTensor:
    """Symmetrized tensor product Sym(A (x) B), computed on canonical storage.

    (A v B)_I = sum over multiset splits of I into (I_A, I_B) of
    prod_v C(m_v, a_v) * A[I_A] * B[I_B] / C(r+s, r).
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    r, s = a.rank, b.rank
    out = SymTensor(a.dim, r + s)
    if r == 0 or s == 0:
        small, big = (a, b) if r == 0 else (b, a)
        c = small.data.get((), 0)
        if _nonzero(c):
            out.data = {i: c * v for i, v in big.data.items()}
        return out
    denom = math.comb(r + s, r)
    frac = _exactish(a) and _exactish(b)
    for idx in canonical_indices(a.dim, r + s):
        counts = Counter(idx)
        values = sorted(counts)
        acc = 0
        for split in _splits(values, counts, r):
            ia, ib, ways = split
            va = a.data.get(ia, 0)
            if not _nonzero(va):
                continue
            vb = b.data.get(ib, 0)
            if not _nonzero(vb):
                continue
            acc = acc + ways * va * vb
        if _nonzero(acc):
            out.data[idx] = acc * Fraction(1, denom) if frac else acc / denom
    return out


def _splits(values, counts, r):
    """Yield (idx_a, idx_b, ways) over multiset splits with |idx_a| = r."""
    ranges = [range(counts[v] + 1) for v in values]
    for take in itertools.product(*ranges):
        if sum(take) != r:
            continue
        ways = 1
        ia, ib = [], []
        for v, t in zip(values, take):
            ways *= math.comb(counts[v], t)
            ia.extend([v] * t)
            ib.extend([v] * (counts[v] - t))
        yield tuple(ia), tuple(ib), ways


def tau(a: SymTensor, q: Bilinear) -> SymTensor:
    """Single contraction (tau A)_{v1..vm} = Q^{ab} A_{ab v1..vm}.

    Rank 0 and 1 inputs contract to zero by definition.
    """
    if a.dim != q.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {q.dim}")
    if a.rank < 2:
        return SymTensor(a.dim, 0)
    out = SymTensor(a.dim, a.rank - 2)
    for idx in canonical_indices(a.dim, a.rank - 2):
        acc = 0
        for i in range(a.dim):
            for j in range(i, a.dim):
                v = a.data.get(canonical(idx + (i, j)), 0)
                if _nonzero(v):
                    w = q[i, j] if i == j else 2 * q[i, j]
                    acc = acc + w * v
        if _nonzero(acc):
            out.data[idx] = acc
    return out


def tau_power(a: SymTensor, q: Bilinear, k: int) -> SymTensor:
    for _ in range(k):
        a = tau(a, q)
    return a


def eval_poly(a: SymTensor, z) -> object:
    """Value of the homogeneous polynomial (1/r!) A_{u1..ur} z^{u1}..z^{ur}."""
    if len(z) != a.dim:
        raise ValueError(f"point has length {len(z)}, tensor dim {a.dim}")
    if a.rank == 0:
        return a.data.get((), 0)
    acc = 0
    for idx, v in a.data.items():
        if not _nonzero(v):
            continue
        mono = v
        for i in idx:
            mono = mono * z[i]
        denom = 1
        for c in Counter(idx).values():
            denom *= math.factorial(c)
        if _exact_value(mono):
            acc = acc + mono * Fraction(1, denom)
        else:
            acc = acc + mono / denom
    return acc


def transform(t: SymTensor, m) -> SymTensor:
    """Pull back along a linear change of frame: T'_{i..} = m_{i i'} .. T_{i'..}."""
    m = np.asarray(m)
    if t.rank == 0:
        return SymTensor(t.dim, 0, dict(t.data))
    arr = t.todense(dtype=float if m.dtype != object else object)
    for axis in range(t.rank):
        arr = np.tensordot(m, arr, axes=([1], [axis]))
        arr = np.moveaxis(arr, 0, axis)
    return SymTensor.from_dense(arr)


def _nonzero(v) -> bool:
    return not (isinstance(v, (int, float, Fraction)) and v == 0)


def _exactish(t: SymTensor) -> bool:
    return all(_exact_value(v) for v in t.data.values())


def _exact_value(v) -> bool:
    return isinstance(v, (int, Fraction)) or (hasattr(v, "is_exact") and v.is_exact)
