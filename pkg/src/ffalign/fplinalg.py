"""Dense linear algebra over F_p and matrix pictures of GF(p^n) multiplication.

An element x of GF(p^n) is identified with the column of its digits stacked
high-to-low, [x_{n-1}; ...; x_0]. Multiplication by a fixed h is then the
n x n matrix ``rep_matrix(h)``, and m channel uses stack m such columns.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import CtxMismatch, DimensionMismatch, Inconsistent, NonSquare, Underdetermined
from .gf import FieldCtx, Gfe


class MatFp:
    """Immutable matrix over F_p backed by an int64 array."""

    __slots__ = ("p", "a")

    def __init__(self, a, p: int):
        arr = np.array(a, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise DimensionMismatch("a matrix needs two dimensions")
        arr %= p
        arr.setflags(write=False)
        self.p = int(p)
        self.a = arr

    @property
    def rows(self) -> int:
        return self.a.shape[0]

    @property
    def cols(self) -> int:
        return self.a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.a.shape

    @property
    def T(self) -> "MatFp":
        return MatFp(self.a.T, self.p)

    def _same_p(self, other: "MatFp") -> None:
        if other.p != self.p:
            raise DimensionMismatch(f"mixing F_{self.p} and F_{other.p}")

    def __matmul__(self, other):
        if isinstance(other, MatFp):
            self._same_p(other)
            if self.cols != other.rows:
                raise DimensionMismatch(f"{self.shape} @ {other.shape}")
            return MatFp(_kernels.matmul(self.a, other.a, self.p), self.p)
        v = np.asarray(other, dtype=np.int64)
        if v.shape[0] != self.cols:
            raise DimensionMismatch(f"{self.shape} @ vector of length {v.shape[0]}")
        return _kernels.matmul(self.a, v, self.p)

    def __add__(self, other: "MatFp") -> "MatFp":
        self._same_p(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} + {other.shape}")
        return MatFp(self.a + other.a, self.p)

    def __sub__(self, other: "MatFp") -> "MatFp":
        self._same_p(other)
        if self.shape != other.shape:
            raise DimensionMismatch(f"{self.shape} - {other.shape}")
        return MatFp(self.a - other.a, self.p)

    def scale(self, c: int) -> "MatFp":
        return MatFp(self.a * (int(c) % self.p), self.p)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MatFp):
            return NotImplemented
        return self.p == other.p and self.shape == other.shape and bool(np.array_equal(self.a, other.a))

    __hash__ = None

    def __getitem__(self, idx):
        out = self.a[idx]
        return int(out) if np.ndim(out) == 0 else out

    def tolist(self) -> list[list[int]]:
        return self.a.tolist()

    def __str__(self) -> str:
        return "[" + ",".join("[" + ",".join(str(x) for x in row) + "]" for row in self.a) + "]"

    def __repr__(self) -> str:
        return f"MatFp(p={self.p}, {self})"

    def rank(self) -> int:
        return rank(self)

    def det(self) -> int:
        return det(self)

    def solve(self, y) -> np.ndarray:
        return solve(self, y)

    def kernel(self) -> "MatFp":
        return kernel(self)


def identity(size: int, p: int) -> MatFp:
    return MatFp(np.eye(size, dtype=np.int64), p)


def hstack(mats: Sequence[MatFp]) -> MatFp:
    if not mats:
        raise DimensionMismatch("nothing to stack")
    p = mats[0].p
    for m in mats:
        if m.p != p:
            raise DimensionMismatch("mixed characteristics")
    return MatFp(np.hstack([m.a for m in mats]), p)


def rank(M: MatFp) -> int:
    return _kernels.rank(M.a, M.p)


def det(M: MatFp) -> int:
    if M.rows != M.cols:
        raise NonSquare(f"determinant of a {M.rows}x{M.cols} matrix")
    return _kernels.det(M.a, M.p)


def solve(M: MatFp, y) -> np.ndarray:
    """The unique x with M x = y, or Inconsistent / Underdetermined."""
    y = np.asarray(y, dtype=np.int64).reshape(-1)
    if y.shape[0] != M.rows:
        raise DimensionMismatch(f"right-hand side of length {y.shape[0]} for {M.rows} rows")
    r, piv = _kernels.rref(np.column_stack([M.a, y]), M.p)
    if M.cols in piv:
        raise Inconsistent("system has no solution")
    if len(piv) < M.cols:
        raise Underdetermined(f"rank {len(piv)} < {M.cols} unknowns")
    return r[: M.cols, M.cols].copy()


def kernel(M: MatFp) -> MatFp:
    """Columns spanning {x : M x = 0}, one per free variable (cols x k)."""
    r, piv = _kernels.rref(M.a, M.p)
    free = [c for c in range(M.cols) if c not in piv]
    basis = np.zeros((M.cols, len(free)), dtype=np.int64)
    for k, f in enumerate(free):
        basis[f, k] = 1
        for i, c in enumerate(piv):
            basis[c, k] = -r[i, f]
    return MatFp(basis, M.p)


def left_annihilator(M: MatFp) -> MatFp:
    """Rows N spanning {y : y M = 0}; N has rows - rank(M) rows."""
    return kernel(M.T).T


def span_equal(A: MatFp, B: MatFp) -> bool:
    """True when the column spans of A and B coincide."""
    if A.rows != B.rows:
        raise DimensionMismatch("column spaces of different ambient dimension")
    ra, rb = rank(A), rank(B)
    return ra == rb == rank(hstack([A, B]))


# ---------------------------------------------------------------------------
# representation of field multiplication


def _rep_array(ctx: FieldCtx, label: int) -> np.ndarray:
    cache = ctx._cache.setdefault("rep", {})
    arr = cache.get(label)
    if arr is None:
        n = ctx.n
        h = Gfe(ctx, label)
        arr = np.empty((n, n), dtype=np.int64)
        # column j is h * s^(n-1-j), matching the high-to-low stacking
        for j in range(n):
            basis = ctx.from_poly((0,) * (n - 1 - j) + (1,))
            arr[:, j] = (h * basis).vec()
        arr.setflags(write=False)
        if len(cache) < 1 << 16:
            cache[label] = arr
    return arr


def rep_matrix(h: Gfe) -> MatFp:
    """M with M @ vec(x) == vec(h * x) for every x."""
    return MatFp(_rep_array(h.ctx, h.label), h.ctx.p)


def extend(h: Gfe | MatFp, m: int) -> MatFp:
    """Block diagonal with m copies of rep_matrix(h) (or of the given matrix)."""
    if m < 1:
        raise DimensionMismatch("extension count must be positive")
    if isinstance(h, Gfe):
        base, p = _rep_array(h.ctx, h.label), h.ctx.p
    else:
        base, p = h.a, h.p
    return MatFp(np.kron(np.eye(m, dtype=np.int64), base), p)


def vec(a: Gfe) -> np.ndarray:
    return a.vec()


def stack_labels(ctx: FieldCtx, labels) -> np.ndarray:
    """Digit stacks of label vectors: (..., m) labels -> (..., m*n) digits, high-to-low per use."""
    d = ctx.digit_array(labels)[..., ::-1]
    return d.reshape(d.shape[:-2] + (-1,))


def unstack_labels(ctx: FieldCtx, digits) -> np.ndarray:
    """Inverse of stack_labels."""
    d = np.asarray(digits, dtype=np.int64)
    d = d.reshape(d.shape[:-1] + (-1, ctx.n))[..., ::-1]
    w = np.array([ctx.p**i for i in range(ctx.n)], dtype=np.int64)
    return (d * w).sum(axis=-1)


def cols_from_elements(elems: Iterable, m: int = 1) -> MatFp:
    """F_p matrix whose columns are digit stacks of field elements.

    With m == 1 each item may be a single element; otherwise each item is a
    column of m elements, stacked one channel use after another.
    """
    cols = []
    ctx = None
    for item in elems:
        entries = [item] if isinstance(item, Gfe) else list(item)
        if len(entries) != m:
            raise DimensionMismatch(f"column with {len(entries)} entries, expected {m}")
        for e in entries:
            if ctx is None:
                ctx = e.ctx
            elif e.ctx is not ctx and e.ctx != ctx:
                raise CtxMismatch("elements from different fields")
        cols.append(np.concatenate([e.vec() for e in entries]))
    if ctx is None:
        raise DimensionMismatch("no columns given")
    return MatFp(np.column_stack(cols), ctx.p)
