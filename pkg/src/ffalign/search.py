"""Depth-first greedy search for precoding vectors.

A signal space is described as a list of columns ``(coef, var)``: the column
is ``coef * v[var]`` where ``coef`` is a field label and ``v[var]`` an unknown
vector of GF(p^n)^m. Unknowns are fixed in index order. Each one takes the
first candidate, in ascending mixed-radix label order, that keeps the columns
of every signal space built so far linearly independent over F_p; a level
with no survivor sends the search back to the previous level.

With ``order="scrambled"`` the candidates are instead visited along a fixed
multiplicative permutation of the labels; still deterministic, but the first
candidates are dense vectors rather than ones supported on the last use.

Candidates are screened in batches: the columns already placed in a space
are annihilated by a left null-space basis N, and a candidate passes when the
projected new columns N * coef * v have full column rank.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import SearchExhausted
from .fplinalg import MatFp, _rep_array, left_annihilator
from .gf import FieldCtx

Column = tuple[int, int]

MAX_LABEL = 2**62


def ones_stack(ctx: FieldCtx, m: int) -> np.ndarray:
    """Digit stack of the all-ones vector in GF(p^n)^m."""
    v = np.zeros(m * ctx.n, dtype=np.int64)
    v[ctx.n - 1 :: ctx.n] = 1
    return v


def label_digits(labels: np.ndarray, p: int, width: int) -> np.ndarray:
    """Base-p digits of each label, most significant first."""
    w = p ** np.arange(width - 1, -1, -1, dtype=np.int64)
    return (labels[:, None] // w[None, :]) % p


def ext_array(ctx: FieldCtx, coef: int, m: int) -> np.ndarray:
    r = _rep_array(ctx, coef)
    return r if m == 1 else np.kron(np.eye(m, dtype=np.int64), r)


def space_columns(ctx: FieldCtx, m: int, space: Sequence[Column], vectors) -> np.ndarray:
    """The F_p matrix of a signal space once every vector is known."""
    cols = [ext_array(ctx, c, m) @ vectors[v] % ctx.p for c, v in space]
    return np.column_stack(cols) if cols else np.zeros((m * ctx.n, 0), dtype=np.int64)


def _scramble_step(size: int, p: int) -> int:
    """A multiplier coprime to size near size / golden ratio.

    Index k maps to label k * step mod size, a fixed permutation of the
    nonzero labels that spreads early candidates over every coordinate.
    """
    if size < 4:
        return 1
    step = min(int(size * 0.6180339887), (1 << 62) // size)
    while step > 1 and (step % p == 0 or np.gcd(step, size) != 1):
        step -= 1
    return max(step, 1)


@dataclass
class GreedySearch:
    ctx: FieldCtx
    m: int
    spaces: list[list[Column]]
    nvars: int
    fixed: dict[int, np.ndarray] = field(default_factory=dict)
    max_candidates: int = 20_000_000
    max_backtracks: int = 100_000
    order: str = "ascending"
    examined: int = 0
    backtracks: int = 0

    @property
    def dim(self) -> int:
        return self.m * self.ctx.n

    def _screen(self, t: int, chosen: list):
        """Batch tester for variable t, or None if some space is already full."""
        p = self.ctx.p
        blocks = []
        for space in self.spaces:
            new = [c for c, v in space if v == t]
            if not new:
                continue
            old = [(c, v) for c, v in space if v < t]
            if old:
                E = MatFp(space_columns(self.ctx, self.m, old, chosen), p)
                N = left_annihilator(E).a
            else:
                N = np.eye(self.dim, dtype=np.int64)
            if N.shape[0] < len(new):
                return None
            blocks.append(np.stack([N @ ext_array(self.ctx, c, self.m) % p for c in new]))

        def test(V: np.ndarray) -> np.ndarray:
            ok = np.ones(V.shape[0], dtype=bool)
            for Ms in blocks:
                Y = np.einsum("jrd,bd->brj", Ms, V) % p
                ok &= _kernels.batch_rank(Y, p) == Ms.shape[0]
            return ok

        return test

    def _candidates(self, t: int, test) -> Iterator[np.ndarray]:
        if t in self.fixed:
            v = np.asarray(self.fixed[t], dtype=np.int64)
            self.examined += 1
            if test(v[None, :])[0]:
                yield v
            return
        p, width = self.ctx.p, self.dim
        end = min(p**width, MAX_LABEL)
        step = _scramble_step(end, p) if self.order == "scrambled" else 1
        start, size = 1, 64
        while start < end:
            stop = min(start + size, end)
            labels = np.arange(start, stop, dtype=np.int64)
            if step != 1:
                labels = (labels * step) % end
            V = label_digits(labels, p, width)
            self.examined += V.shape[0]
            if self.examined > self.max_candidates:
                raise SearchExhausted(f"candidate budget of {self.max_candidates} exceeded")
            for i in np.flatnonzero(test(V)):
                yield V[i]
            start, size = stop, min(size * 4, 16384)

    def run(self) -> list[np.ndarray]:
        chosen: list = [None] * self.nvars

        def dfs(t: int) -> bool:
            if t == self.nvars:
                return True
            test = self._screen(t, chosen)
            if test is None:
                return False
            for cand in self._candidates(t, test):
                chosen[t] = cand
                if dfs(t + 1):
                    return True
                self.backtracks += 1
                if self.backtracks > self.max_backtracks:
                    raise SearchExhausted(f"backtrack budget of {self.max_backtracks} exceeded")
            chosen[t] = None
            return False

        if not dfs(0):
            raise SearchExhausted("no assignment keeps every signal space independent")
        return chosen
