"""The two-user X channel over GF(p^n).

Source i sends message W_ji to destination j for all four pairs, and
destination j receives ``y_j = h_j1 x_1 + h_j2 x_2``. Per-node scalings reduce
a fully connected channel to

    y_1 = x_1 + x_2
    y_2 = h x_1 + x_2,      h = h12 h21 / (h11 h22)

and sum rate 4/3 is reached by aligning W21 with W22 at destination 1 and
W11 with W12 at destination 2, possible exactly when h lies outside F_p.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import (
    CtxMismatch,
    FullyConnected,
    Infeasible,
    NoNonResidue,
    SearchExhausted,
    VerificationFailed,
    ZeroCoefficient,
    ZeroH,
)
from .fplinalg import MatFp, span_equal, unstack_labels
from .gf import FieldCtx, Gfe, make_ctx, quadratic_nonresidue
from .network import Flow, build_decoder, check_destination, destination_spaces, received_columns, scale_labels, transmit
from .search import GreedySearch, ones_stack

# (name, source, destination), 0-based nodes; W_ji goes from source i to destination j
MESSAGES = (("11", 0, 0), ("12", 1, 0), ("21", 0, 1), ("22", 1, 1))
ALIGNED_MODES = ("scalar_p3", "altproof_p3", "ext_p2", "general_pn")

# fixed beams for the F_{p^2} construction over three uses; rows are the
# constant coordinates of uses 1..3 followed by the sqrt(c) coordinates
P2_V11 = np.array([[1, 1], [1, 0], [0, 0], [1, 1], [0, 1], [0, 1]], dtype=np.int64)
P2_V21 = np.array([[1, 0], [1, 0], [1, 1], [0, 0], [1, 1], [1, 1]], dtype=np.int64)


@dataclass(frozen=True)
class XChannel:
    ctx: FieldCtx
    h11: Gfe
    h12: Gfe
    h21: Gfe
    h22: Gfe

    def __post_init__(self):
        for h in (self.h11, self.h12, self.h21, self.h22):
            if h.ctx is not self.ctx and h.ctx != self.ctx:
                raise CtxMismatch("channel coefficient from another field")

    @classmethod
    def from_matrix(cls, ctx: FieldCtx, matrix) -> "XChannel":
        (a, b), (c, d) = matrix
        return cls(ctx, ctx(a), ctx(b), ctx(c), ctx(d))

    @property
    def gains(self) -> list[list[int]]:
        return [[self.h11.label, self.h12.label], [self.h21.label, self.h22.label]]

    def zero_pattern(self) -> tuple[bool, bool, bool, bool]:
        return (not self.h11, not self.h12, not self.h21, not self.h22)


@dataclass(frozen=True)
class XNormalization:
    """Scalings bringing a channel to gains (1, 1; h, 1).

    The raw transmit symbol of source i is ``source_scale[i]`` times the
    normalized one, and destination j divides its output by ``dest_scale[j]``.
    """

    h: Gfe
    source_scale: tuple[Gfe, Gfe]
    dest_scale: tuple[Gfe, Gfe]

    def normalized_gains(self, ch: XChannel) -> list[list[Gfe]]:
        raw = [[ch.h11, ch.h12], [ch.h21, ch.h22]]
        return [[raw[j][i] * self.source_scale[i] / self.dest_scale[j] for i in range(2)] for j in range(2)]


@dataclass
class XScheme:
    ctx: FieldCtx
    mode: str
    m: int
    precoders: dict[str, np.ndarray]
    sum_rate: Fraction
    h: int | None = None
    certificates: dict = field(default_factory=dict)

    @property
    def streams(self) -> dict[str, int]:
        return {name: int(self.precoders[name].shape[1]) for name, _, _ in MESSAGES}

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "p": self.ctx.p,
            "n": self.ctx.n,
            "modulus": list(self.ctx.modulus.coeffs),
            "h": self.h,
            "m": self.m,
            "streams": self.streams,
            "precoders": {k: self.precoders[k].tolist() for k, _, _ in MESSAGES},
            "certificates": dict(self.certificates),
            "sum_rate": str(self.sum_rate),
        }

    @classmethod
    def from_json(cls, data: dict) -> "XScheme":
        ctx = make_ctx(data["p"], data["n"], data.get("modulus"))
        m = int(data["m"])
        pre = {}
        for name, _, _ in MESSAGES:
            arr = np.array(data["precoders"][name], dtype=np.int64)
            pre[name] = arr.reshape(m, -1) if arr.size else np.zeros((m, 0), dtype=np.int64)
        return cls(ctx, data["mode"], m, pre, Fraction(data["sum_rate"]), data.get("h"), dict(data.get("certificates", {})))


# ---------------------------------------------------------------------------
# classification and normalization


def classify_zero(ch: XChannel) -> dict:
    """Capacity of a channel with at least one zero coefficient."""
    z11, z12, z21, z22 = ch.zero_pattern()
    if not any((z11, z12, z21, z22)):
        raise FullyConnected("no coefficient is zero; normalize the channel instead")
    if z11 and z12 and z21 and z22:
        case, cap = 3, 0
    elif z12 and z21 and not z11 and not z22:
        case, cap = 1, 2
    elif z11 and z22 and not z12 and not z21:
        case, cap = 2, 2
    else:
        case, cap = 4, 1
    return {"C": cap, "C_linear": cap, "case": case}


def normalize(ch: XChannel) -> XNormalization:
    if not (ch.h11 and ch.h12 and ch.h21 and ch.h22):
        raise ZeroCoefficient("normalization needs all four coefficients nonzero")
    one = ch.ctx.one
    h = ch.h12 * ch.h21 / (ch.h11 * ch.h22)
    return XNormalization(
        h=h,
        source_scale=(one, ch.h11 / ch.h12),
        dest_scale=(ch.h11, ch.h11 * ch.h22 / ch.h12),
    )


def feasible(h: Gfe) -> bool:
    if not h:
        raise ZeroH("normalized coefficient is zero")
    return not h.in_base_field()


def classify(ch: XChannel) -> dict:
    """Capacity report for any channel, zero pattern or fully connected."""
    if any(ch.zero_pattern()):
        return classify_zero(ch)
    h = normalize(ch).h
    ok = feasible(h)
    report = {"case": "fully_connected", "h": h.label, "feasible": ok}
    report["C_linear"] = "4/3" if ok else "1"
    if ok and ch.ctx.p == 2 and ch.ctx.n > 3:
        report["proof"] = "constructive search only"
    return report


# ---------------------------------------------------------------------------
# constructions


def _full_basis(ctx: FieldCtx) -> np.ndarray:
    """One use carrying n streams along s^{n-1}, ..., s, 1."""
    return np.array([[ctx.p**k for k in range(ctx.n - 1, -1, -1)]], dtype=np.int64)


def _empty(m: int) -> np.ndarray:
    return np.zeros((m, 0), dtype=np.int64)


def _aligned_scheme(ctx: FieldCtx, mode: str, m: int, h: Gfe, v11: np.ndarray, v21: np.ndarray) -> XScheme:
    pre = {
        "11": v11,
        "12": scale_labels(ctx, v11, h.label),
        "21": v21,
        "22": v21.copy(),
    }
    d = v11.shape[1]
    return XScheme(ctx, mode, m, pre, Fraction(4 * d, m * ctx.n), h.label)


def degenerate_scheme(h: Gfe) -> XScheme:
    """Rate 1: W11 alone, n streams in one use."""
    ctx = h.ctx
    pre = {"11": _full_basis(ctx), "12": _empty(1), "21": _empty(1), "22": _empty(1)}
    return XScheme(ctx, "degenerate_rate1", 1, pre, Fraction(1), h.label)


def zero_pattern_scheme(ch: XChannel) -> XScheme:
    """Routing scheme meeting the zero-pattern capacity on the raw channel."""
    ctx = ch.ctx
    case = classify_zero(ch)["case"]
    active: tuple[str, ...]
    if case == 1:
        active = ("11", "22")
    elif case == 2:
        active = ("12", "21")
    elif case == 3:
        active = ()
    else:
        gains = dict(zip(("11", "12", "21", "22"), (ch.h11, ch.h12, ch.h21, ch.h22)))
        active = (next(k for k, g in gains.items() if g),)
    pre = {name: (_full_basis(ctx) if name in active else _empty(1)) for name, _, _ in MESSAGES}
    scheme = XScheme(ctx, "zero_pattern", 1, pre, Fraction(len(active)))
    scheme.certificates["case"] = case
    return scheme


def _scalar_search(h: Gfe) -> int:
    """Smallest g with {g, hg, 1} and {1, h, hg} both independent over F_p."""
    ctx = h.ctx
    spaces = [[(1, 1), (h.label, 1), (1, 0)], [(1, 0), (h.label, 0), (h.label, 1)]]
    search = GreedySearch(ctx, 1, spaces, 2, fixed={0: ones_stack(ctx, 1)})
    return int(_labels_of(ctx, search.run()[1], 1)[0])


def _labels_of(ctx: FieldCtx, stack: np.ndarray, m: int) -> np.ndarray:
    return unstack_labels(ctx, np.asarray(stack).reshape(m * ctx.n))


def _require_feasible(h: Gfe) -> None:
    if not feasible(h):
        raise Infeasible(f"h = {h.label} lies in F_{h.ctx.p}; linear capacity is 1")


def construct_x_p3(h: Gfe, alt: bool = False) -> XScheme:
    """One stream per message, no extension, over GF(p^3)."""
    ctx = h.ctx
    if ctx.n != 3:
        raise ValueError("construct_x_p3 needs n = 3")
    _require_feasible(h)
    v11 = h.label if alt else _scalar_search(h)
    scheme = _aligned_scheme(ctx, "altproof_p3" if alt else "scalar_p3", 1, h, np.array([[v11]]), np.array([[1]]))
    return _certify(scheme, h)


def sqrt_nonresidue(ctx: FieldCtx) -> tuple[int, Gfe]:
    """(c, r) with c the smallest non-residue mod p and r the smallest-label root of c."""
    c = quadratic_nonresidue(ctx.p)
    target = ctx.const(c)
    r = next(a for a in ctx.nonzero() if a * a == target)
    return c, r


def p2_coordinates(h: Gfe, r: Gfe) -> tuple[int, int]:
    """(h1, h0) with h = h1 r + h0."""
    ctx = h.ctx
    basis = MatFp(np.column_stack([r.vec(), ctx.one.vec()]), ctx.p)
    h1, h0 = basis.solve(h.vec())
    return int(h1), int(h0)


def _p2_elements(ctx: FieldCtx, coords: np.ndarray, r: Gfe) -> np.ndarray:
    """Three-use label columns from (constant; r-coefficient) coordinate rows."""
    out = np.zeros((3, coords.shape[1]), dtype=np.int64)
    for col in range(coords.shape[1]):
        for u in range(3):
            out[u, col] = (ctx.const(coords[u, col]) + ctx.const(coords[3 + u, col]) * r).label
    return out


def p2_signal_matrices(h: Gfe) -> tuple[np.ndarray, np.ndarray, int, int, int]:
    """S1, S2 in (constant, sqrt(c)) coordinates, with c, h1, h0."""
    ctx = h.ctx
    c, r = sqrt_nonresidue(ctx)
    h1, h0 = p2_coordinates(h, r)
    p = ctx.p
    I3 = np.eye(3, dtype=np.int64)
    Hbar = np.block([[h0 * I3, c * h1 * I3], [h1 * I3, h0 * I3]]) % p
    S1 = np.hstack([P2_V11, Hbar @ P2_V11, P2_V21]) % p
    S2 = np.hstack([P2_V21, Hbar @ P2_V21, Hbar @ P2_V11]) % p
    return S1, S2, c, h1, h0


def construct_x_p2(h: Gfe) -> XScheme:
    """Two streams per message over three uses of GF(p^2)."""
    ctx = h.ctx
    if ctx.n != 2:
        raise ValueError("construct_x_p2 needs n = 2")
    _require_feasible(h)
    try:
        c, r = sqrt_nonresidue(ctx)
    except NoNonResidue:
        return _p2_search(h)
    S1, S2, c, h1, h0 = p2_signal_matrices(h)
    scheme = _aligned_scheme(ctx, "ext_p2", 3, h, _p2_elements(ctx, P2_V11, r), _p2_elements(ctx, P2_V21, r))
    p = ctx.p
    scheme.certificates.update(
        {
            "c": c,
            "h1": h1,
            "h0": h0,
            "det_S1": _kernels.det(S1, p),
            "det_S2": _kernels.det(S2, p),
            "det_S1_formula": c * h1 * h1 % p,
            "det_S2_formula": h1 * h1 * (c * h1 * h1 - h0 * h0) % p,
        }
    )
    return _certify(scheme, h)


def _p2_search(h: Gfe) -> XScheme:
    # unknowns: two beams of W11 then two of W21, each in GF(p^2)^3
    ctx = h.ctx
    a = h.label
    spaces = [
        [(1, 0), (1, 1), (a, 0), (a, 1), (1, 2), (1, 3)],
        [(1, 2), (1, 3), (a, 2), (a, 3), (a, 0), (a, 1)],
    ]
    vecs = GreedySearch(ctx, 3, spaces, 4).run()
    cols = [_labels_of(ctx, v, 3) for v in vecs]
    v11 = np.column_stack(cols[:2])
    v21 = np.column_stack(cols[2:])
    scheme = _aligned_scheme(ctx, "ext_p2", 3, h, v11, v21)
    scheme.certificates["search"] = "exhaustive"
    return _certify(scheme, h)


def construct_x_general(h: Gfe, max_backtracks: int = 10_000) -> XScheme:
    """n streams per message over three uses, vectors chosen greedily."""
    ctx = h.ctx
    if ctx.n < 3:
        raise ValueError("construct_x_general needs n >= 3")
    _require_feasible(h)
    n, m = ctx.n, 3
    hl = h.label
    last_error = None
    # g ranges over the elements passing the scalar test, smallest first
    for g in _scalar_candidates(h):
        hg = ctx.mul_labels(hl, g)
        S1, S2 = [], []
        for k in range(n):
            S1 += [(g, k), (hg, k), (1, k)]
            S2 += [(hl, k), (hg, k), (1, k)]
        search = GreedySearch(ctx, m, [S1, S2], n, fixed={0: ones_stack(ctx, m)}, max_backtracks=max_backtracks)
        try:
            vecs = search.run()
        except SearchExhausted as exc:
            last_error = exc
            if ctx.p > 2:
                raise
            continue
        v = np.column_stack([_labels_of(ctx, x, m) for x in vecs])
        scheme = _aligned_scheme(ctx, "general_pn", m, h, scale_labels(ctx, v, g), v)
        scheme.certificates["g"] = g
        return _certify(scheme, h)
    raise SearchExhausted(f"no precoders found for h = {hl}: {last_error}")


def _scalar_candidates(h: Gfe):
    ctx = h.ctx
    p = ctx.p
    for g in range(1, ctx.q):
        cols1 = np.column_stack([ctx(g).vec(), (h * ctx(g)).vec(), ctx.one.vec()])
        cols2 = np.column_stack([ctx.one.vec(), h.vec(), (h * ctx(g)).vec()])
        if _kernels.rank(cols1, p) == 3 and _kernels.rank(cols2, p) == 3:
            yield g


def construct(ch: XChannel) -> XScheme:
    """Best scheme for any channel: routing, degenerate or aligned."""
    if any(ch.zero_pattern()):
        return zero_pattern_scheme(ch)
    h = normalize(ch).h
    if not feasible(h):
        return degenerate_scheme(h)
    n = ch.ctx.n
    if n == 1:
        return degenerate_scheme(h)
    if n == 2:
        return construct_x_p2(h)
    if n == 3:
        return construct_x_p3(h)
    return construct_x_general(h)


# ---------------------------------------------------------------------------
# verification and simulation


def _flows(scheme: XScheme, ch: XChannel) -> list[Flow]:
    ctx = scheme.ctx
    if scheme.mode == "zero_pattern":
        scale = (1, 1)
    else:
        norm = normalize(ch)
        scale = (norm.source_scale[0].label, norm.source_scale[1].label)
    flows = []
    for name, src, dst in MESSAGES:
        pre = scheme.precoders[name]
        flows.append(Flow(name, src, dst, scale_labels(ctx, pre, scale[src]) if pre.size else pre))
    return flows


def _identity_certificates(scheme: XScheme, ch: XChannel) -> None:
    ctx = scheme.ctx
    if ch.ctx != ctx:
        raise VerificationFailed("scheme and channel live in different fields")
    if scheme.mode == "zero_pattern":
        return
    try:
        norm = normalize(ch)
    except ZeroCoefficient as exc:
        raise VerificationFailed(str(exc)) from None
    if scheme.h is not None and scheme.h != norm.h.label:
        raise VerificationFailed(f"scheme built for h = {scheme.h}, channel has h = {norm.h.label}")
    if scheme.mode in ALIGNED_MODES:
        pre = scheme.precoders
        if not np.array_equal(pre["22"], pre["21"]):
            raise VerificationFailed("alignment: precoder of W22 differs from W21")
        if not np.array_equal(pre["12"], scale_labels(ctx, pre["11"], norm.h.label)):
            raise VerificationFailed("alignment: precoder of W12 is not h times W11")


def verify_x(scheme: XScheme, ch: XChannel) -> dict:
    _identity_certificates(scheme, ch)
    ctx, m = scheme.ctx, scheme.m
    flows = _flows(scheme, ch)
    gains = ch.gains
    checks = [check_destination(ctx, m, gains, flows, j) for j in range(2)]
    for c in checks:
        if not c.resolvable:
            raise VerificationFailed(
                f"destination {c.dest + 1}: desired rank {c.desired_rank} of {c.desired_streams}, "
                f"total rank {c.total_rank} != {c.desired_rank} + {c.interference_rank}"
            )
    if scheme.mode in ALIGNED_MODES:
        full = m * ctx.n
        by_name = {f.name: f for f in flows}
        for j, (a, b) in enumerate((("21", "22"), ("11", "12"))):
            if checks[j].total_rank != full:
                raise VerificationFailed(f"destination {j + 1}: signal space rank {checks[j].total_rank} != {full}")
            fa, fb = by_name[a], by_name[b]
            A = MatFp(received_columns(ctx, gains[j][fa.source], fa.precoder), ctx.p)
            B = MatFp(received_columns(ctx, gains[j][fb.source], fb.precoder), ctx.p)
            if not span_equal(A, B):
                raise VerificationFailed(f"destination {j + 1}: interference from W{a} and W{b} not aligned")
    report = {
        "pass": True,
        "mode": scheme.mode,
        "m": m,
        "rank_S1": checks[0].total_rank,
        "rank_S2": checks[1].total_rank,
        "desired_dims": [c.desired_rank for c in checks],
        "aligned_dims": [c.interference_rank for c in checks],
        "sum_rate": str(scheme.sum_rate),
    }
    return report


def _certify(scheme: XScheme, h: Gfe) -> XScheme:
    """Attach rank certificates computed on the normalized channel."""
    ctx = scheme.ctx
    one = ctx.one
    ch = XChannel(ctx, one, one, h, one)
    report = verify_x(scheme, ch)
    scheme.certificates.update(
        {"rank_S1": report["rank_S1"], "rank_S2": report["rank_S2"], "aligned_dims": report["aligned_dims"]}
    )
    return scheme


def simulate_x(scheme: XScheme, ch: XChannel, msgs: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    """Encode, send through the raw channel and decode every message.

    ``msgs[name]`` holds F_p symbols of shape (T, streams) or (streams,).
    """
    ctx, m = scheme.ctx, scheme.m
    flows = _flows(scheme, ch)
    batch = {}
    for f in flows:
        x = np.asarray(msgs.get(f.name, np.zeros((0,))), dtype=np.int64)
        batch[f.name] = x.reshape(-1, f.streams) if f.streams else np.zeros((_rows(msgs), 0), dtype=np.int64)
    rx = transmit(ctx, m, ch.gains, flows, batch, 2)
    out = {}
    for j in range(2):
        dec = build_decoder(ctx, m, ch.gains, flows, j)
        out.update(dec(rx[j], ctx.p))
    for f in flows:
        out.setdefault(f.name, np.zeros((batch[f.name].shape[0], 0), dtype=np.int64))
    return out


def _rows(msgs: dict) -> int:
    for v in msgs.values():
        a = np.asarray(v)
        if a.ndim == 2:
            return a.shape[0]
        if a.size:
            return 1
    return 1


def signal_spans_coincide(ch: XChannel, precoders: dict[str, np.ndarray], m: int) -> bool:
    """Whether destinations 1 and 2 see the same span of all four messages."""
    ctx = ch.ctx
    flows = [Flow(name, s, d, precoders[name]) for name, s, d in MESSAGES]
    spans = []
    for j in range(2):
        D, I = destination_spaces(ctx, m, ch.gains, flows, j)
        spans.append(MatFp(np.hstack([D, I]), ctx.p))
    return span_equal(spans[0], spans[1])
