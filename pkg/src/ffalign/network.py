"""Linear precoding over a single-hop network with scalar GF(p^n) gains.

Shared by the X channel and the interference channel. A flow carries ``d``
F_p streams from one source to one destination; its precoder is an m x d
matrix of field labels, column c being the beam of stream c over m uses.
Gains are labels indexed ``gains[dest][source]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DecodeAmbiguous
from .fplinalg import _rep_array, stack_labels
from .gf import FieldCtx


@dataclass(frozen=True)
class Flow:
    name: str
    source: int
    dest: int
    precoder: np.ndarray  # (m, d) labels

    @property
    def streams(self) -> int:
        return self.precoder.shape[1]


def scale_labels(ctx: FieldCtx, labels: np.ndarray, c: int) -> np.ndarray:
    """Multiply every label of an array by the field element c."""
    flat = [ctx.mul_labels(int(x), c) for x in np.asarray(labels).ravel()]
    return np.array(flat, dtype=np.int64).reshape(np.shape(labels))


def precoder_stack(ctx: FieldCtx, precoder: np.ndarray) -> np.ndarray:
    """F_p matrix (m*n, d) whose columns are the stacked beams."""
    pre = np.asarray(precoder, dtype=np.int64)
    if pre.shape[1] == 0:
        return np.zeros((pre.shape[0] * ctx.n, 0), dtype=np.int64)
    return stack_labels(ctx, pre.T).T


def received_columns(ctx: FieldCtx, gain: int, precoder: np.ndarray) -> np.ndarray:
    """Columns of a flow as seen through a scalar gain."""
    m = np.shape(precoder)[0]
    stack = precoder_stack(ctx, precoder)
    # block diagonal gain applied one symbol extension at a time
    blocks = stack.reshape(m, ctx.n, -1)
    return (_rep_array(ctx, gain) @ blocks % ctx.p).reshape(stack.shape)


def _hcat(ctx: FieldCtx, m: int, blocks: list[np.ndarray]) -> np.ndarray:
    if not blocks:
        return np.zeros((m * ctx.n, 0), dtype=np.int64)
    return np.hstack(blocks)


def destination_spaces(ctx: FieldCtx, m: int, gains, flows: list[Flow], dest: int):
    """(desired, interference) column blocks at one destination."""
    desired, interf = [], []
    for f in flows:
        g = int(gains[dest][f.source])
        if f.streams == 0 or (g == 0 and f.dest != dest):
            continue
        cols = received_columns(ctx, g, f.precoder)
        (desired if f.dest == dest else interf).append(cols)
    return _hcat(ctx, m, desired), _hcat(ctx, m, interf)


@dataclass(frozen=True)
class DestinationCheck:
    dest: int
    desired_streams: int
    desired_rank: int
    interference_rank: int
    total_rank: int

    @property
    def resolvable(self) -> bool:
        return (
            self.desired_rank == self.desired_streams
            and self.total_rank == self.desired_rank + self.interference_rank
        )


def check_destination(ctx: FieldCtx, m: int, gains, flows: list[Flow], dest: int) -> DestinationCheck:
    D, I = destination_spaces(ctx, m, gains, flows, dest)
    p = ctx.p
    return DestinationCheck(
        dest=dest,
        desired_streams=D.shape[1],
        desired_rank=_kernels.rank(D, p) if D.size else 0,
        interference_rank=_kernels.rank(I, p) if I.size else 0,
        total_rank=_kernels.rank(np.hstack([D, I]), p) if D.size + I.size else 0,
    )


def _inverse(a: np.ndarray, p: int) -> np.ndarray:
    k = a.shape[0]
    r, piv = _kernels.rref(np.hstack([a, np.eye(k, dtype=np.int64)]), p)
    if piv[:k] != list(range(k)):
        raise DecodeAmbiguous("signal space matrix is singular")
    return r[:, k:]


@dataclass(frozen=True)
class Decoder:
    """Zero-forcing decoder for the flows ending at one destination."""

    dest: int
    flows: tuple[str, ...]
    sizes: tuple[int, ...]
    rows: np.ndarray
    inverse: np.ndarray

    def __call__(self, y: np.ndarray, p: int) -> dict[str, np.ndarray]:
        z = _kernels.matmul(y[:, self.rows], self.inverse.T, p)
        out, k = {}, 0
        for name, d in zip(self.flows, self.sizes):
            out[name] = z[:, k : k + d]
            k += d
        return out


def build_decoder(ctx: FieldCtx, m: int, gains, flows: list[Flow], dest: int) -> Decoder:
    p = ctx.p
    D, I = destination_spaces(ctx, m, gains, flows, dest)
    if I.shape[1]:
        _, piv = _kernels.rref(I, p)
        I = I[:, piv]
    A = np.hstack([D, I])
    if A.shape[1] == 0:
        rows = np.zeros(0, dtype=np.int64)
        inv = np.zeros((0, 0), dtype=np.int64)
    else:
        _, rows = _kernels.rref(A.T, p)
        if len(rows) < A.shape[1]:
            raise DecodeAmbiguous(f"destination {dest + 1}: desired streams overlap interference")
        rows = np.array(rows, dtype=np.int64)
        inv = _inverse(A[rows], p)
    mine = [f for f in flows if f.dest == dest and f.streams]
    return Decoder(dest, tuple(f.name for f in mine), tuple(f.streams for f in mine), rows, inv)


def transmit(ctx: FieldCtx, m: int, gains, flows: list[Flow], symbols: dict[str, np.ndarray], n_nodes: int):
    """Superpose each source's streams and pass them through the channel.

    ``symbols[name]`` has shape (T, d). Returns received digit stacks per
    destination, each of shape (T, m*n).
    """
    p = ctx.p
    T = next(iter(symbols.values())).shape[0] if symbols else 0
    tx = [np.zeros((T, m * ctx.n), dtype=np.int64) for _ in range(n_nodes)]
    for f in flows:
        if f.streams == 0:
            continue
        sym = np.asarray(symbols[f.name], dtype=np.int64) % p
        tx[f.source] = (tx[f.source] + _kernels.matmul(sym, precoder_stack(ctx, f.precoder).T, p)) % p
    rx = []
    for j in range(len(gains)):
        y = np.zeros((T, m * ctx.n), dtype=np.int64)
        for i in range(n_nodes):
            g = int(gains[j][i])
            if g:
                G = np.kron(np.eye(m, dtype=np.int64), _rep_array(ctx, g))
                y = (y + _kernels.matmul(tx[i], G.T, p)) % p
        rx.append(y)
    return rx
