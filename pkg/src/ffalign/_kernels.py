"""Gaussian elimination mod p.

Two interchangeable backends: numba-compiled loops and vectorised numpy.
The numba path is used when numba imports and ``FFALIGN_DISABLE_NUMBA`` is
unset; both are always importable so they can be cross-checked and
benchmarked side by side.

All kernels take int64 arrays whose entries are already reduced to [0, p).
"""
from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "FFALIGN_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("", "0", "false", "no", "off")


try:
    if not _numba_requested():
        raise ImportError
    import numba

    _njit = numba.njit(cache=True, nogil=True)
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def _njit(f):
        return f


BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numba kernels (plain Python loops, compiled when numba is present)


@_njit
def _inv_mod(a, p):
    t, nt = 0, 1
    r, nr = p, a % p
    while nr != 0:
        q = r // nr
        t, nt = nt, t - q * nt
        r, nr = nr, r - q * nr
    return t % p


@_njit
def _rref_loop(a, p):
    rows, cols = a.shape
    pivots = np.full(min(rows, cols), -1, dtype=np.int64)
    r = 0
    for c in range(cols):
        if r == rows:
            break
        k = -1
        for i in range(r, rows):
            if a[i, c] != 0:
                k = i
                break
        if k < 0:
            continue
        if k != r:
            for j in range(cols):
                tmp = a[r, j]
                a[r, j] = a[k, j]
                a[k, j] = tmp
        inv = _inv_mod(a[r, c], p)
        for j in range(c, cols):
            a[r, j] = a[r, j] * inv % p
        for i in range(rows):
            if i != r:
                f = a[i, c]
                if f != 0:
                    for j in range(c, cols):
                        a[i, j] = (a[i, j] - f * a[r, j]) % p
        pivots[r] = c
        r += 1
    return r, pivots


@_njit
def _rank_loop(a, p):
    r, _ = _rref_loop(a, p)
    return r


@_njit
def _batch_rank_loop(stack, p):
    out = np.empty(stack.shape[0], dtype=np.int64)
    for b in range(stack.shape[0]):
        out[b] = _rank_loop(stack[b].copy(), p)
    return out


@_njit
def _det_loop(a, p):
    n = a.shape[0]
    d = 1
    for c in range(n):
        k = -1
        for i in range(c, n):
            if a[i, c] != 0:
                k = i
                break
        if k < 0:
            return 0
        if k != c:
            for j in range(n):
                tmp = a[c, j]
                a[c, j] = a[k, j]
                a[k, j] = tmp
            d = (p - d) % p
        d = d * a[c, c] % p
        inv = _inv_mod(a[c, c], p)
        for i in range(c + 1, n):
            f = a[i, c] * inv % p
            if f != 0:
                for j in range(c, n):
                    a[i, j] = (a[i, j] - f * a[c, j]) % p
    return d


# ---------------------------------------------------------------------------
# numpy kernels


def _inv_vec(x: np.ndarray, p: int) -> np.ndarray:
    """Elementwise inverse mod p by square-and-multiply (x nonzero)."""
    result = np.ones_like(x)
    base = x % p
    e = p - 2
    while e:
        if e & 1:
            result = result * base % p
        base = base * base % p
        e >>= 1
    return result


def _rref_numpy(a: np.ndarray, p: int) -> tuple[int, np.ndarray]:
    rows, cols = a.shape
    pivots = np.full(min(rows, cols), -1, dtype=np.int64)
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            a[[r, k]] = a[[k, r]]
        a[r] = a[r] * pow(int(a[r, c]), -1, p) % p
        f = a[:, c].copy()
        f[r] = 0
        a -= np.outer(f, a[r])
        a %= p
        pivots[r] = c
        r += 1
    return r, pivots


def _batch_rank_numpy(stack: np.ndarray, p: int) -> np.ndarray:
    s = stack.copy()
    nb, rows, cols = s.shape
    rank = np.zeros(nb, dtype=np.int64)
    row_ids = np.arange(rows)
    for c in range(cols):
        cand = (s[:, :, c] != 0) & (row_ids[None, :] >= rank[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        b = np.flatnonzero(has)
        k = cand[b].argmax(axis=1)
        r = rank[b]
        row_k = s[b, k].copy()
        s[b, k] = s[b, r]
        prow = row_k * _inv_vec(row_k[:, c], p)[:, None] % p
        s[b, r] = prow
        f = s[b, :, c].copy()
        f[np.arange(b.size), r] = 0
        s[b] = (s[b] - f[:, :, None] * prow[:, None, :]) % p
        rank[b] += 1
    return rank


def _det_numpy(a: np.ndarray, p: int) -> int:
    n = a.shape[0]
    d = 1
    for c in range(n):
        nz = np.flatnonzero(a[c:, c])
        if nz.size == 0:
            return 0
        k = c + nz[0]
        if k != c:
            a[[c, k]] = a[[k, c]]
            d = -d
        piv = int(a[c, c])
        d = d * piv % p
        f = a[c + 1:, c] * pow(piv, -1, p) % p
        a[c + 1:] = (a[c + 1:] - np.outer(f, a[c])) % p
    return d % p


# ---------------------------------------------------------------------------
# dispatch


def _prep(a, p: int) -> np.ndarray:
    return np.array(a, dtype=np.int64) % p


def rref(a, p: int, backend: str | None = None) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of ``a`` over F_p and its pivot columns."""
    m = _prep(a, p)
    if m.ndim != 2:
        raise ValueError("rref expects a 2-d array")
    if (backend or BACKEND) == "numba" and HAVE_NUMBA:
        r, piv = _rref_loop(m, p)
    else:
        r, piv = _rref_numpy(m, p)
    return m, [int(c) for c in piv[:r]]


def rank(a, p: int, backend: str | None = None) -> int:
    m = _prep(a, p)
    if m.size == 0:
        return 0
    if (backend or BACKEND) == "numba" and HAVE_NUMBA:
        return int(_rank_loop(m, p))
    return int(_rref_numpy(m, p)[0])


def batch_rank(stack, p: int, backend: str | None = None) -> np.ndarray:
    """Ranks of a stack of matrices with shape (batch, rows, cols)."""
    s = _prep(stack, p)
    if s.ndim != 3:
        raise ValueError("batch_rank expects a 3-d array")
    if s.shape[0] == 0 or s.shape[1] == 0 or s.shape[2] == 0:
        return np.zeros(s.shape[0], dtype=np.int64)
    if (backend or BACKEND) == "numba" and HAVE_NUMBA:
        return _batch_rank_loop(s, p)
    return _batch_rank_numpy(s, p)


def det(a, p: int, backend: str | None = None) -> int:
    m = _prep(a, p)
    if m.shape[0] == 0:
        return 1 % p
    if (backend or BACKEND) == "numba" and HAVE_NUMBA:
        return int(_det_loop(m, p))
    return int(_det_numpy(m, p))


def matmul(a, b, p: int) -> np.ndarray:
    """Matrix product mod p, falling back to Python ints when int64 could overflow."""
    a = np.asarray(a)
    b = np.asarray(b)
    inner = a.shape[-1] if a.ndim else 1
    if (p - 1) * (p - 1) * max(inner, 1) < 2**62:
        return (a.astype(np.int64) @ b.astype(np.int64)) % p
    out = (a.astype(object) @ b.astype(object)) % p
    return out.astype(np.int64)
