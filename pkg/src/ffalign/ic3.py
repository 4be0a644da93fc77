"""The three-user interference channel over GF(p^n).

Source i talks only to destination i; destination j hears
``y_j = sum_i h_ji x_i``. With every coefficient nonzero, node scalings
leave four parameters and the channel

    y_1 = hb11 x_1 + x_2 + x_3
    y_2 = x_1 + hb22 x_2 + x_3
    y_3 = x_1 + hb x_2 + hb33 x_3

on which three families of alignment schemes are built: a shared beam when
hb is in F_p, powers of hb for odd n, and a five-use scheme for n = 2.
Channels with zero coefficients are routed or mapped onto a small set of
canonical structures.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import (
    ConditionsNotMet,
    CtxMismatch,
    FullyConnected,
    SearchExhausted,
    VerificationFailed,
    ZeroCoefficient,
)
from .fplinalg import MatFp, _rep_array, cols_from_elements, kernel, span_equal, unstack_labels
from .gf import FieldCtx, Gfe, make_ctx
from .network import Flow, build_decoder, check_destination, received_columns, scale_labels, transmit
from .search import GreedySearch, ones_stack

NORMALIZED_MODES = ("eigen_even", "eigen_odd", "odd_powers", "ext5_p2", "degenerate_rate1")
ZERO_MODES = ("zero_routing", "zero_structure", "zero_rate1")


@dataclass(frozen=True)
class IC3Channel:
    ctx: FieldCtx
    h: tuple[tuple[Gfe, ...], ...]  # h[j][i]: source i -> destination j

    def __post_init__(self):
        if len(self.h) != 3 or any(len(row) != 3 for row in self.h):
            raise ValueError("an interference channel needs a 3x3 gain matrix")
        for row in self.h:
            for g in row:
                if g.ctx is not self.ctx and g.ctx != self.ctx:
                    raise CtxMismatch("channel coefficient from another field")

    @classmethod
    def from_matrix(cls, ctx: FieldCtx, matrix) -> "IC3Channel":
        return cls(ctx, tuple(tuple(ctx(x) for x in row) for row in matrix))

    @property
    def gains(self) -> list[list[int]]:
        return [[g.label for g in row] for row in self.h]

    def zeros(self) -> frozenset[tuple[int, int]]:
        """1-based (j, i) pairs with h_ji = 0."""
        return frozenset((j + 1, i + 1) for j in range(3) for i in range(3) if not self.h[j][i])

    def relabel(self, sigma: tuple[int, int, int]) -> "IC3Channel":
        """Channel seen after renaming user k as sigma[k] (0-based)."""
        out = [[None] * 3 for _ in range(3)]
        for j in range(3):
            for i in range(3):
                out[sigma[j]][sigma[i]] = self.h[j][i]
        return IC3Channel(self.ctx, tuple(tuple(r) for r in out))


def normalized_channel(ctx: FieldCtx, hb11, hb22, hb33, hb) -> IC3Channel:
    """The four-parameter channel; it is its own normal form."""
    e = [ctx(x) for x in (hb11, hb22, hb33, hb)]
    one = ctx.one
    return IC3Channel(ctx, ((e[0], one, one), (one, e[1], one), (one, e[3], e[2])))


@dataclass(frozen=True)
class ICNormalization:
    """Four parameters plus the node scalings producing them.

    Raw transmit symbols are ``source_scale[i]`` times normalized ones and
    destination j divides by ``dest_scale[j]``.
    """

    hbar11: Gfe
    hbar22: Gfe
    hbar33: Gfe
    hbar: Gfe
    source_scale: tuple[Gfe, Gfe, Gfe]
    dest_scale: tuple[Gfe, Gfe, Gfe]

    @property
    def ctx(self) -> FieldCtx:
        return self.hbar.ctx

    @property
    def direct(self) -> tuple[Gfe, Gfe, Gfe]:
        return (self.hbar11, self.hbar22, self.hbar33)

    def labels(self) -> dict[str, int]:
        return {
            "hbar11": self.hbar11.label,
            "hbar22": self.hbar22.label,
            "hbar33": self.hbar33.label,
            "hbar": self.hbar.label,
        }

    def normalized_gains(self, ch: IC3Channel) -> list[list[Gfe]]:
        return [[ch.h[j][i] * self.source_scale[i] / self.dest_scale[j] for i in range(3)] for j in range(3)]

    @classmethod
    def of(cls, ctx: FieldCtx, hb11, hb22, hb33, hb) -> "ICNormalization":
        """Normalization of the already normalized channel (unit scalings)."""
        one = ctx.one
        return cls(ctx(hb11), ctx(hb22), ctx(hb33), ctx(hb), (one, one, one), (one, one, one))


@dataclass
class ICScheme:
    ctx: FieldCtx
    mode: str
    m: int
    precoders: list[np.ndarray]
    sum_rate: Fraction
    hbar: dict[str, int] | None = None
    certificates: dict = field(default_factory=dict)

    @property
    def streams(self) -> list[int]:
        return [int(v.shape[1]) for v in self.precoders]

    @property
    def normalized(self) -> bool:
        return self.mode in NORMALIZED_MODES

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "p": self.ctx.p,
            "n": self.ctx.n,
            "modulus": list(self.ctx.modulus.coeffs),
            "hbar": self.hbar,
            "m": self.m,
            "streams": self.streams,
            "precoders": [v.tolist() for v in self.precoders],
            "certificates": dict(self.certificates),
            "sum_rate": str(self.sum_rate),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ICScheme":
        ctx = make_ctx(data["p"], data["n"], data.get("modulus"))
        m = int(data["m"])
        pre = []
        for v in data["precoders"]:
            arr = np.array(v, dtype=np.int64)
            pre.append(arr.reshape(m, -1) if arr.size else np.zeros((m, 0), dtype=np.int64))
        return cls(ctx, data["mode"], m, pre, Fraction(data["sum_rate"]), data.get("hbar"), dict(data.get("certificates", {})))


# ---------------------------------------------------------------------------
# normalization


def normalize_ic(ch: IC3Channel) -> ICNormalization:
    h = ch.h
    if ch.zeros():
        raise ZeroCoefficient("normalization needs all nine coefficients nonzero")
    h11, h12, h13 = h[0]
    h21, h22, h23 = h[1]
    h31, h32, h33 = h[2]
    one = ch.ctx.one
    return ICNormalization(
        hbar11=h11 * h23 / (h13 * h21),
        hbar22=h22 * h13 / (h23 * h12),
        hbar33=h33 * h21 / (h31 * h23),
        hbar=h13 * h21 * h32 / (h12 * h23 * h31),
        source_scale=(h12 * h23 / (h13 * h21), one, h12 / h13),
        dest_scale=(h12, h12 * h23 / h13, h12 * h23 * h31 / (h21 * h13)),
    )


# ---------------------------------------------------------------------------
# feasibility conditions


def _powers(h: Gfe, top: int) -> list[Gfe]:
    """[h^top, ..., h, 1]."""
    return [h**k for k in range(top, -1, -1)]


def _independence(elems: list[Gfe]) -> tuple[bool, list[int] | None]:
    """Whether the elements are F_p-independent, with a dependence if not."""
    if not elems:
        return True, None
    M = cols_from_elements(elems)
    if M.rank() == len(elems):
        return True, None
    return False, [int(x) for x in kernel(M).a[:, 0]]


def _outside_fp(name: str, x: Gfe) -> dict:
    ok = not x.in_base_field()
    return {"name": name, "pass": ok, "witness": None if ok else {"value_in_Fp": x.label}}


def odd_condition_elements(norm: ICNormalization) -> dict[str, list[Gfe]]:
    """Element lists whose independence places hb11, hb22, hb33 outside A, B, C."""
    n = norm.ctx.n
    l = (n - 1) // 2
    hi, lo = _powers(norm.hbar, l), _powers(norm.hbar, l - 1) if l else []
    return {
        "hbar11_not_in_A": [norm.hbar11 * x for x in hi] + lo,
        "hbar22_not_in_B": [norm.hbar22 * x for x in lo] + hi,
        "hbar33_not_in_C": [norm.hbar33 * x for x in lo] + hi,
        "hbar_powers_independent": hi,
    }


def eigen_conditions(norm: ICNormalization) -> list[dict]:
    hb = norm.hbar
    first = {"name": "hbar_in_Fp", "pass": hb.in_base_field(), "witness": None}
    return [first] + [_outside_fp(f"hbar{k}{k}_not_in_Fp", x) for k, x in zip((1, 2, 3), norm.direct)]


def odd_conditions(norm: ICNormalization) -> list[dict]:
    out = []
    for name, elems in odd_condition_elements(norm).items():
        ok, dep = _independence(elems)
        out.append({"name": name, "pass": ok, "witness": None if ok else {"dependence": dep}})
    return out


def p2_conditions(norm: ICNormalization) -> list[dict]:
    hb = norm.hbar
    out = [
        _outside_fp("hbar11_not_in_Fp", norm.hbar11),
        _outside_fp("hbar_hbar11_not_in_Fp", hb * norm.hbar11),
        _outside_fp("hbar22_not_in_Fp", norm.hbar22),
    ]
    out.append(_outside_fp("hbar_over_hbar22_not_in_Fp", hb / norm.hbar22) if norm.hbar22 else _zero_fail("hbar_over_hbar22_not_in_Fp"))
    out.append(_outside_fp("hbar33_not_in_Fp", norm.hbar33))
    out.append(_outside_fp("hbar_over_hbar33_not_in_Fp", hb / norm.hbar33) if norm.hbar33 else _zero_fail("hbar_over_hbar33_not_in_Fp"))
    return out


def _zero_fail(name: str) -> dict:
    return {"name": name, "pass": False, "witness": {"division_by_zero": True}}


def odd_rate(n: int) -> Fraction:
    l = (n - 1) // 2
    return Fraction(3 * l + 1, 2 * l + 1)


def decide(n: int, eigen_ok: bool, odd_ok: bool, p2_ok: bool) -> str:
    """Class of a normalized channel from its per-construction verdicts."""
    if eigen_ok:
        return "EigenCase"
    if n % 2 == 1 and odd_ok:
        return "OddPowersCase"
    if n == 2 and p2_ok:
        return "P2Case"
    return "Unclassified"


CLASS_RATE = {"EigenCase": Fraction(3, 2), "P2Case": Fraction(6, 5), "Unclassified": Fraction(1)}


def class_rate(cls: str, n: int) -> Fraction:
    return odd_rate(n) if cls == "OddPowersCase" else CLASS_RATE[cls]


def classify_normalized(norm: ICNormalization) -> dict:
    n = norm.ctx.n
    groups = {"eigen": eigen_conditions(norm)}
    if n % 2 == 1:
        groups["odd_powers"] = odd_conditions(norm)
    if n == 2:
        groups["p2"] = p2_conditions(norm)
    verdict = {k: all(c["pass"] for c in v) for k, v in groups.items()}
    cls = decide(n, verdict["eigen"], verdict.get("odd_powers", False), verdict.get("p2", False))
    failed = [f"{k}:{c['name']}" for k, v in groups.items() for c in v if not c["pass"]]
    return {
        "class": cls,
        "C_linear": str(class_rate(cls, n)),
        "hbar": norm.labels(),
        "conditions": groups,
        "failed": failed,
    }


def classify_ic(ch: IC3Channel) -> dict:
    if ch.zeros():
        return {"class": "ZeroPattern", **classify_zero_ic(ch)}
    return classify_normalized(normalize_ic(ch))


# ---------------------------------------------------------------------------
# vectorized predicates over every candidate value of one direct coefficient


def _times_all(ctx: FieldCtx, c: int) -> np.ndarray:
    """Digit stacks (q, n) of c * x for every label x."""
    X = ctx.digit_array(np.arange(ctx.q))[:, ::-1]
    return X @ _rep_array(ctx, c).T % ctx.p


def _fixed_stack(ctx: FieldCtx, elems: list[Gfe]) -> np.ndarray:
    if not elems:
        return np.zeros((ctx.n, 0), dtype=np.int64)
    return np.column_stack([e.vec() for e in elems])


def predicate_table(ctx: FieldCtx, hb: int) -> dict[str, np.ndarray]:
    """Boolean arrays over all labels x, for a fixed hbar.

    Keys: ``not_fp`` (x outside F_p), ``odd_A`` / ``odd_B`` (the independence
    tests placing x outside A resp. B = C), ``p2_11`` / ``p2_kk`` (the n = 2
    conditions on hb11 resp. hb22, hb33).
    """
    p, n, q = ctx.p, ctx.n, ctx.q
    labels = np.arange(q)
    out = {"not_fp": labels >= p}
    h = ctx(hb)
    if n % 2 == 1:
        l = (n - 1) // 2
        hi, lo = _powers(h, l), (_powers(h, l - 1) if l else [])
        fixed_lo = _fixed_stack(ctx, lo)
        fixed_hi = _fixed_stack(ctx, hi)
        a_cols = [_times_all(ctx, e.label) for e in hi]
        A = np.concatenate([np.stack(a_cols, axis=2), np.broadcast_to(fixed_lo, (q,) + fixed_lo.shape)], axis=2)
        out["odd_A"] = _kernels.batch_rank(np.ascontiguousarray(A), p) == n
        b_cols = [_times_all(ctx, e.label) for e in lo]
        parts = [np.stack(b_cols, axis=2)] if b_cols else []
        parts.append(np.broadcast_to(fixed_hi, (q,) + fixed_hi.shape))
        B = np.concatenate(parts, axis=2)
        out["odd_B"] = _kernels.batch_rank(np.ascontiguousarray(B), p) == n
    if n == 2 and hb:
        w = ctx.p ** np.arange(n - 1, -1, -1)
        prod = _times_all(ctx, hb) @ w
        quot = _times_all(ctx, ctx.inv_label(hb)) @ w
        out["p2_11"] = out["not_fp"] & (prod >= p)
        out["p2_kk"] = out["not_fp"] & (quot >= p)
    return out


def hbar_powers_independent(h: Gfe) -> bool:
    l = (h.ctx.n - 1) // 2
    return _independence(_powers(h, l))[0]


# ---------------------------------------------------------------------------
# constructions on the normalized channel


def _labels_of(ctx: FieldCtx, stack, m: int) -> np.ndarray:
    return unstack_labels(ctx, np.asarray(stack).reshape(m * ctx.n))


def _require(conds: list[dict], what: str) -> None:
    bad = [c["name"] for c in conds if not c["pass"]]
    if bad:
        raise ConditionsNotMet(f"{what}: failed {', '.join(bad)}")


def _full_basis(ctx: FieldCtx) -> np.ndarray:
    return np.array([[ctx.p**k for k in range(ctx.n - 1, -1, -1)]], dtype=np.int64)


def _empty(m: int) -> np.ndarray:
    return np.zeros((m, 0), dtype=np.int64)


def _shared_beam(ctx: FieldCtx, gains: list[Gfe], max_backtracks: int = 100_000) -> tuple[int, np.ndarray]:
    """Beam V with [g V, V] full rank for every g in gains; returns (m, V)."""
    n = ctx.n
    m, k = (1, n // 2) if n % 2 == 0 else (2, n)
    spaces = [[c for j in range(k) for c in ((g.label, j), (1, j))] for g in gains]
    search = GreedySearch(ctx, m, spaces, k, fixed={0: ones_stack(ctx, m)}, max_backtracks=max_backtracks)
    vecs = search.run()
    return m, np.column_stack([_labels_of(ctx, v, m) for v in vecs])


def construct_eigen(norm: ICNormalization) -> ICScheme:
    ctx = norm.ctx
    _require(eigen_conditions(norm), "shared-beam scheme")
    m, V = _shared_beam(ctx, list(norm.direct))
    mode = "eigen_even" if ctx.n % 2 == 0 else "eigen_odd"
    k = V.shape[1]
    scheme = ICScheme(ctx, mode, m, [V, V.copy(), V.copy()], Fraction(3 * k, m * ctx.n), norm.labels())
    return _certify(scheme, norm)


def construct_odd(norm: ICNormalization) -> ICScheme:
    ctx = norm.ctx
    n = ctx.n
    if n % 2 == 0:
        raise ConditionsNotMet("powers-of-hbar scheme needs odd n")
    _require(odd_conditions(norm), "powers-of-hbar scheme")
    l = (n - 1) // 2
    v1 = np.array([[x.label for x in _powers(norm.hbar, l)]], dtype=np.int64)
    v2 = v1[:, 1:].copy()
    scheme = ICScheme(ctx, "odd_powers", 1, [v1, v2, v2.copy()], odd_rate(n), norm.labels())
    return _certify(scheme, norm)


def p2_spaces(norm: ICNormalization) -> list[list[tuple[int, int]]]:
    """Signal spaces of the five-use scheme in the free vectors.

    Variables 0..5 are V1^1, V1^2, V2^1, V2^2, V3^1, V3^2.
    """
    ctx = norm.ctx
    h11, h22, h33, hb = (x.label for x in (norm.hbar11, norm.hbar22, norm.hbar33, norm.hbar))
    mul, inv = ctx.mul_labels, ctx.inv_label
    ihb = inv(hb)
    return [
        [(h11, 0), (h11, 1), (mul(h11, hb), 2), (h11, 5), (1, 2), (1, 3), (1, 4), (ihb, 1), (1, 5), (1, 0)],
        [(h22, 2), (h22, 3), (h22, 4), (mul(h22, ihb), 1), (1, 4), (1, 5), (1, 0), (1, 3), (1, 1), (hb, 2)],
        [(h33, 4), (h33, 5), (h33, 0), (h33, 3), (1, 0), (1, 1), (hb, 2), (1, 5), (hb, 3), (hb, 4)],
    ]


def construct_p2(norm: ICNormalization, max_backtracks: int = 100_000) -> ICScheme:
    ctx = norm.ctx
    if ctx.n != 2:
        raise ConditionsNotMet("five-use scheme needs n = 2")
    _require(p2_conditions(norm), "five-use scheme")
    m = 5
    search = GreedySearch(
        ctx, m, p2_spaces(norm), 6, fixed={0: ones_stack(ctx, m)}, max_backtracks=max_backtracks, order="scrambled"
    )
    u = [_labels_of(ctx, v, m) for v in search.run()]
    hb = norm.hbar.label
    ihb = ctx.inv_label(hb)
    V1 = np.column_stack([u[0], u[1], scale_labels(ctx, u[2], hb), u[5]])
    V2 = np.column_stack([u[2], u[3], u[4], scale_labels(ctx, u[1], ihb)])
    V3 = np.column_stack([u[4], u[5], u[0], u[3]])
    scheme = ICScheme(ctx, "ext5_p2", m, [V1, V2, V3], Fraction(12, 10), norm.labels())
    scheme.certificates.update({"examined": search.examined, "backtracks": search.backtracks})
    return _certify(scheme, norm)


def degenerate_scheme(ctx: FieldCtx, hbar: dict | None = None, mode: str = "degenerate_rate1", user: int = 0) -> ICScheme:
    """Rate 1: one user alone at full rate."""
    pre = [_full_basis(ctx) if k == user else _empty(1) for k in range(3)]
    return ICScheme(ctx, mode, 1, pre, Fraction(1), hbar)


def construct_normalized(norm: ICNormalization) -> ICScheme:
    """Best implemented scheme for a normalized channel."""
    report = classify_normalized(norm)
    cls = report["class"]
    attempts = []
    if cls == "EigenCase":
        attempts.append(construct_eigen)
    if norm.ctx.n % 2 == 1 and report.get("conditions", {}).get("odd_powers") and all(
        c["pass"] for c in report["conditions"]["odd_powers"]
    ):
        attempts.append(construct_odd)
    if norm.ctx.n == 2 and all(c["pass"] for c in report["conditions"].get("p2", [{"pass": False}])):
        attempts.append(construct_p2)
    notes = []
    for build in attempts:
        try:
            return build(norm)
        except SearchExhausted as exc:
            notes.append(f"{build.__name__}: {exc}")
    scheme = degenerate_scheme(norm.ctx, norm.labels())
    scheme.certificates["failed"] = report["failed"] + notes
    return _certify(scheme, norm)


def construct_ic(ch: IC3Channel) -> ICScheme:
    if ch.zeros():
        return construct_zero_structure(ch)
    return construct_normalized(normalize_ic(ch))


# ---------------------------------------------------------------------------
# zero patterns


@dataclass(frozen=True)
class Structure:
    name: str
    zeros: frozenset
    free: frozenset  # links kept off the spanning tree
    groups: str  # beam group per source
    conditions: tuple[int, ...]  # users whose normalized direct gain must avoid F_p


STRUCTURES = (
    Structure("D", frozenset({(1, 2), (1, 3), (2, 3)}), frozenset({(2, 2)}), "VVW", (2,)),
    Structure("E", frozenset({(1, 3), (2, 1), (3, 2)}), frozenset(), "", ()),
    Structure("G", frozenset({(1, 2), (1, 3)}), frozenset({(2, 2), (3, 3)}), "VVV", (2, 3)),
    Structure("H", frozenset({(1, 2), (2, 3)}), frozenset({(2, 2), (3, 3)}), "VVW", (2,)),
    Structure("I", frozenset({(1, 2), (3, 1)}), frozenset({(1, 1), (3, 3)}), "VWV", (1,)),
    Structure("J", frozenset({(1, 2), (3, 2)}), frozenset({(1, 1), (3, 3)}), "VWV", (1, 3)),
    Structure("K", frozenset({(3, 2)}), frozenset({(1, 1), (2, 2), (3, 3)}), "VVV", (1, 2, 3)),
)

PERMUTATIONS = tuple(itertools.permutations(range(3)))


def relabel_zeros(zeros, sigma) -> frozenset:
    return frozenset((sigma[j - 1] + 1, sigma[i - 1] + 1) for j, i in zeros)


def canonicalize(zeros) -> tuple[Structure, tuple[int, int, int]] | None:
    """First (structure, relabeling) whose zero set matches, identity first."""
    zeros = frozenset(zeros)
    for sigma in PERMUTATIONS:
        z = relabel_zeros(zeros, sigma)
        for s in STRUCTURES:
            if z == s.zeros:
                return s, sigma
    return None


def _reciprocal_pair(zeros) -> tuple[int, int] | None:
    for a, b in ((1, 2), (1, 3), (2, 3)):
        if (a, b) in zeros and (b, a) in zeros:
            return a, b
    return None


def zero_case(zeros) -> dict:
    """Case number and capacity of a zero pattern (1-based link pairs)."""
    zeros = frozenset(zeros)
    direct = [k for k in (1, 2, 3) if (k, k) in zeros]
    cross = [z for z in zeros if z[0] != z[1]]
    if not zeros:
        raise FullyConnected("no coefficient is zero")
    if len(direct) == 3:
        return {"case": 1, "C": 0, "serve": []}
    if len(direct) == 2:
        k = next(u for u in (1, 2, 3) if u not in direct)
        return {"case": 2, "C": 1, "serve": [k]}
    if len(direct) == 1:
        a, b = (u for u in (1, 2, 3) if u != direct[0])
        if (a, b) in zeros and (b, a) in zeros:
            return {"case": 3, "C": 2, "serve": [a, b]}
        return {"case": 3, "C": 1, "serve": [a]}
    if len(cross) == 6:
        return {"case": 4, "C": 3, "serve": [1, 2, 3]}
    pair = _reciprocal_pair(zeros)
    if len(cross) in (4, 5):
        return {"case": 5, "C": 2, "serve": list(pair)}
    if pair is not None:
        return {"case": 6, "C": 2, "serve": list(pair)}
    return {"case": 7, "C": None, "serve": []}


def tree_scalings(ch: IC3Channel, free) -> tuple[list[Gfe], list[Gfe]]:
    """Source multipliers and destination divisors making every tree link 1."""
    ctx = ch.ctx
    tree = [(j, i) for j in range(3) for i in range(3) if ch.h[j][i] and (j + 1, i + 1) not in free]
    a: list[Gfe | None] = [ctx.one, None, None]
    b: list[Gfe | None] = [None, None, None]
    changed = True
    while changed:
        changed = False
        for j, i in tree:
            if a[i] is not None and b[j] is None:
                b[j] = ch.h[j][i] * a[i]
                changed = True
            elif b[j] is not None and a[i] is None:
                a[i] = b[j] / ch.h[j][i]
                changed = True
    if any(x is None for x in a + b) or len(tree) != 5:
        raise ValueError("links do not form a spanning tree")
    return a, b


def _structure_beams(ctx: FieldCtx, s: Structure, g: list[list[Gfe]]):
    """Greedy beams for the structure on normalized gains g[j][i]."""
    n = ctx.n
    m, k = (1, n // 2) if n % 2 == 0 else (2, n)
    names = sorted(set(s.groups))
    base = {name: idx * k for idx, name in enumerate(names)}
    spaces = []
    for j in range(3):
        cols: list[tuple[int, int]] = []
        for i in [j] + [x for x in range(3) if x != j]:
            if not g[j][i]:
                continue
            for c in range(k):
                col = (g[j][i].label, base[s.groups[i]] + c)
                if col not in cols:
                    cols.append(col)
        spaces.append(cols)
    search = GreedySearch(ctx, m, spaces, k * len(names), fixed={0: ones_stack(ctx, m)})
    vecs = [_labels_of(ctx, v, m) for v in search.run()]
    beams = {name: np.column_stack(vecs[base[name] : base[name] + k]) for name in names}
    return m, [beams[s.groups[i]] for i in range(3)]


def _structure_scheme(ch: IC3Channel, s: Structure) -> ICScheme:
    """Scheme for a channel whose zero set equals the structure's."""
    ctx = ch.ctx
    if s.name == "E":
        b = _full_basis(ctx)
        z = np.zeros_like(b)
        pre = [np.vstack([b, z]), np.vstack([z, b]), np.vstack([b, b])]
        scheme = ICScheme(ctx, "zero_structure", 2, pre, Fraction(3, 2))
        scheme.certificates["structure"] = "E"
        return scheme
    a, d = tree_scalings(ch, s.free)
    g = [[ch.h[j][i] * a[i] / d[j] for i in range(3)] for j in range(3)]
    cond = {f"hbar{k}{k}": g[k - 1][k - 1] for k in s.conditions}
    failing = {name: x.label for name, x in cond.items() if x.in_base_field()}
    info = {"structure": s.name, "normalized_direct": {f"hbar{k}{k}": g[k - 1][k - 1].label for k in (1, 2, 3)}}
    if not failing:
        try:
            m, beams = _structure_beams(ctx, s, g)
        except SearchExhausted as exc:
            failing = {"search": str(exc)}
        else:
            pre = [scale_labels(ctx, beams[i], a[i].label) for i in range(3)]
            k = beams[0].shape[1]
            scheme = ICScheme(ctx, "zero_structure", m, pre, Fraction(3 * k, m * ctx.n))
            scheme.certificates.update(info)
            return scheme
    scheme = degenerate_scheme(ctx, None, "zero_rate1")
    open_case = any(isinstance(v, int) and v != 1 for v in failing.values())
    scheme.certificates.update(info)
    scheme.certificates.update({"failed": failing, "open_case": open_case})
    return scheme


def classify_zero_ic(ch: IC3Channel) -> dict:
    zeros = ch.zeros()
    info = zero_case(zeros)
    out = {"case": info["case"], "C_linear": None if info["C"] is None else str(info["C"])}
    if info["case"] != 7:
        return out
    s, sigma = canonicalize(zeros)
    out.update({"structure": s.name, "relabeling": list(sigma)})
    scheme = _structure_scheme(ch.relabel(sigma), s)
    if scheme.mode == "zero_structure":
        out["C_linear"] = "3/2"
    else:
        out["C_linear"] = "1"
        out["failed"] = scheme.certificates["failed"]
        out["open_case"] = scheme.certificates["open_case"]
    return out


def construct_zero_structure(ch: IC3Channel) -> ICScheme:
    ctx = ch.ctx
    zeros = ch.zeros()
    info = zero_case(zeros)
    if info["case"] != 7:
        pre = [_full_basis(ctx) if k + 1 in info["serve"] else _empty(1) for k in range(3)]
        scheme = ICScheme(ctx, "zero_routing", 1, pre, Fraction(info["C"]))
        scheme.certificates["case"] = info["case"]
        return scheme
    s, sigma = canonicalize(zeros)
    canon = _structure_scheme(ch.relabel(sigma), s)
    # canonical source sigma[i] is original source i
    pre = [canon.precoders[sigma[i]] for i in range(3)]
    scheme = ICScheme(ctx, canon.mode, canon.m, pre, canon.sum_rate, None, dict(canon.certificates))
    scheme.certificates.update({"case": 7, "relabeling": list(sigma)})
    if scheme.mode == "zero_rate1":
        # serve a user that has a nonzero direct link (all do in case 7)
        scheme.precoders = [_full_basis(ctx), _empty(1), _empty(1)]
    return scheme


# ---------------------------------------------------------------------------
# verification and simulation


def _flows(scheme: ICScheme, ch: IC3Channel) -> list[Flow]:
    ctx = scheme.ctx
    if scheme.normalized:
        scale = [x.label for x in normalize_ic(ch).source_scale]
    else:
        scale = [1, 1, 1]
    flows = []
    for i, pre in enumerate(scheme.precoders):
        raw = scale_labels(ctx, pre, scale[i]) if pre.size else pre
        flows.append(Flow(str(i + 1), i, i, raw))
    return flows


def _alignment_certificates(scheme: ICScheme, hb: int) -> None:
    ctx = scheme.ctx
    V1, V2, V3 = scheme.precoders
    mode = scheme.mode

    def same(a, b, what):
        if not np.array_equal(a, b):
            raise VerificationFailed(f"alignment: {what}")

    if mode in ("eigen_even", "eigen_odd"):
        same(V1, V2, "sources 1 and 2 use different beams")
        same(V1, V3, "sources 1 and 3 use different beams")
    elif mode == "odd_powers":
        same(V2, V3, "sources 2 and 3 use different beams")
        same(V1[:, 1:], V2, "source 1 does not extend the beam of source 2")
        same(V1[:, :1], scale_labels(ctx, V1[:, 1:2], hb), "leading beam of source 1 is not hbar times the next")
    elif mode == "ext5_p2":
        ihb = ctx.inv_label(hb)
        same(V1[:, 2], scale_labels(ctx, V2[:, 0], hb), "V1^3 != hbar V2^1")
        same(V1[:, 3], V3[:, 1], "V1^4 != V3^2")
        same(V2[:, 2], V3[:, 0], "V2^3 != V3^1")
        same(V2[:, 3], scale_labels(ctx, V1[:, 1], ihb), "V2^4 != V1^2 / hbar")
        same(V3[:, 2], V1[:, 0], "V3^3 != V1^1")
        same(V3[:, 3], V2[:, 1], "V3^4 != V2^2")


def verify_ic(scheme: ICScheme, ch: IC3Channel) -> dict:
    ctx, m = scheme.ctx, scheme.m
    if ch.ctx != ctx:
        raise VerificationFailed("scheme and channel live in different fields")
    if len(scheme.precoders) != 3 or any(v.shape[0] != m for v in scheme.precoders):
        raise VerificationFailed("precoders must be three matrices with m rows")
    hb = None
    if scheme.normalized:
        try:
            norm = normalize_ic(ch)
        except ZeroCoefficient as exc:
            raise VerificationFailed(str(exc)) from None
        if scheme.hbar is not None and scheme.hbar != norm.labels():
            raise VerificationFailed(f"scheme built for {scheme.hbar}, channel has {norm.labels()}")
        hb = norm.hbar.label
    _alignment_certificates(scheme, hb if hb is not None else 1)
    flows = _flows(scheme, ch)
    gains = ch.gains
    checks = [check_destination(ctx, m, gains, flows, j) for j in range(3)]
    for c in checks:
        if not c.resolvable:
            raise VerificationFailed(
                f"destination {c.dest + 1}: desired rank {c.desired_rank} of {c.desired_streams}, "
                f"total rank {c.total_rank} != {c.desired_rank} + {c.interference_rank}"
            )
    full = m * ctx.n
    if scheme.mode in ("eigen_even", "eigen_odd", "odd_powers", "ext5_p2"):
        for c in checks:
            if c.total_rank != full:
                raise VerificationFailed(f"destination {c.dest + 1}: signal space rank {c.total_rank} != {full}")
    if scheme.mode in ("eigen_even", "eigen_odd"):
        for j in range(3):
            a, b = (i for i in range(3) if i != j)
            A = MatFp(received_columns(ctx, gains[j][a], flows[a].precoder), ctx.p)
            B = MatFp(received_columns(ctx, gains[j][b], flows[b].precoder), ctx.p)
            if not span_equal(A, B):
                raise VerificationFailed(f"destination {j + 1}: interference spans differ")
    return {
        "pass": True,
        "mode": scheme.mode,
        "m": m,
        "streams": scheme.streams,
        "rank_S": [c.total_rank for c in checks],
        "desired_dims": [c.desired_rank for c in checks],
        "aligned_dims": [c.interference_rank for c in checks],
        "sum_rate": str(scheme.sum_rate),
    }


def _certify(scheme: ICScheme, norm: ICNormalization) -> ICScheme:
    ch = normalized_channel(norm.ctx, norm.hbar11, norm.hbar22, norm.hbar33, norm.hbar)
    report = verify_ic(scheme, ch)
    scheme.certificates.update(
        {
            "rank_S1": report["rank_S"][0],
            "rank_S2": report["rank_S"][1],
            "rank_S3": report["rank_S"][2],
            "aligned_dims": report["aligned_dims"],
        }
    )
    return scheme


def simulate_ic(scheme: ICScheme, ch: IC3Channel, msgs: list[np.ndarray]) -> list[np.ndarray]:
    """Encode, send through the raw channel, decode each user's streams.

    ``msgs[i]`` holds F_p symbols of shape (T, d_i) or (d_i,).
    """
    ctx, m = scheme.ctx, scheme.m
    flows = _flows(scheme, ch)
    T = _block_length(msgs, flows)
    batch = {}
    for x, f in zip(msgs, flows):
        batch[f.name] = np.asarray(x, dtype=np.int64).reshape(-1, f.streams) if f.streams else np.zeros((T, 0), dtype=np.int64)
    rx = transmit(ctx, m, ch.gains, flows, batch, 3)
    out = []
    for j, f in enumerate(flows):
        if not f.streams:
            out.append(np.zeros((T, 0), dtype=np.int64))
            continue
        dec = build_decoder(ctx, m, ch.gains, flows, j)
        out.append(dec(rx[j], ctx.p)[f.name])
    return out


def _block_length(msgs, flows) -> int:
    for x, f in zip(msgs, flows):
        a = np.asarray(x)
        if a.ndim == 2:
            return a.shape[0]
        if f.streams:
            return a.size // f.streams
    return 1


# ---------------------------------------------------------------------------
# alignment depth


def depth_bound(n: int) -> int:
    return 2 * n - n // 2 - 1


def check_alignment_depth(norm: ICNormalization, max_tuples: int = 1 << 16) -> dict:
    """Certify that no alignment chain on this channel exceeds depth 3l + 1.

    For every tuple of nonzero F_p chain scalars the chain columns reaching
    each destination must span the whole space, and hbar^l must stay outside
    the span of the lower powers; together these rule out a longer chain.
    """
    ctx = norm.ctx
    n, p = ctx.n, ctx.p
    if n % 2 == 0:
        raise ConditionsNotMet("alignment depth certificate covers odd n only")
    _require(odd_conditions(norm), "alignment depth")
    l = (n - 1) // 2
    hb = norm.hbar
    hi, lo = _powers(hb, l), (_powers(hb, l - 1) if l else [])
    chains = {
        1: ([norm.hbar11 * x for x in hi[:-1]], [norm.hbar11], lo),
        2: ([norm.hbar22 * x for x in lo], [], hi),
        3: ([norm.hbar33 * x for x in lo], [], hi),
    }
    nonzero = range(1, p)
    checked = 0
    for dest, (scaled, fixed, other) in chains.items():
        free = len(scaled) + len(other)
        for combo in itertools.islice(itertools.product(nonzero, repeat=free), max_tuples):
            cs = combo[: len(scaled)]
            co = combo[len(scaled) :]
            elems = [x * c for x, c in zip(scaled, cs)] + fixed + [x * c for x, c in zip(other, co)]
            ok, dep = _independence(elems)
            if not ok or len(elems) != n:
                raise ConditionsNotMet(f"destination {dest}: chain dependent for scalars {combo}: {dep}")
            checked += 1
    if not _independence(hi)[0]:
        raise ConditionsNotMet("hbar^l lies in the span of lower powers")
    D = depth_bound(n)
    assert D == 3 * l + 1
    return {"pass": True, "n": n, "l": l, "D": D, "chain_bound": 3 * l + 1, "tuples_checked": checked}
