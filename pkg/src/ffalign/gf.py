"""Finite fields GF(p^n) built as polynomials in ``s`` modulo a monic irreducible.

An element is a tuple of n base-p digits, digit i being the coefficient of
s^i, and is identified by its integer label ``sum(digits[i] * p**i)``.
Labels below p are exactly the base-field constants.

Elements print high-to-low, so label 22 of GF(27) shows as ``[2,1,1]``
(2s^2 + s + 1).
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import (
    CtxMismatch,
    DegreeTooLarge,
    DivisionByZero,
    FieldError,
    FieldTooLarge,
    NoNonResidue,
    NonMonic,
    NotPrime,
    ParseError,
)

MAX_DEGREE = 16
MAX_ORDER = 2**31


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


# ---------------------------------------------------------------------------
# polynomials over F_p as low-to-high coefficient tuples


def _trim(c: Sequence[int]) -> tuple[int, ...]:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def _poly_mod(a: Sequence[int], b: Sequence[int], p: int) -> tuple[int, ...]:
    r = [x % p for x in a]
    db = len(b) - 1
    inv_lead = pow(b[-1], -1, p)
    for i in range(len(r) - 1, db - 1, -1):
        f = r[i] * inv_lead % p
        if f:
            off = i - db
            for j, bj in enumerate(b):
                r[off + j] = (r[off + j] - f * bj) % p
    return _trim(r[:db])


def _poly_divmod(a: Sequence[int], b: Sequence[int], p: int):
    r = [x % p for x in a]
    db = len(b) - 1
    if len(r) - 1 < db:
        return (), _trim(r)
    q = [0] * (len(r) - db)
    inv_lead = pow(b[-1], -1, p)
    for i in range(len(r) - 1, db - 1, -1):
        f = r[i] * inv_lead % p
        q[i - db] = f
        if f:
            off = i - db
            for j, bj in enumerate(b):
                r[off + j] = (r[off + j] - f * bj) % p
    return _trim(q), _trim(r[:db])


def _poly_mul(a: Sequence[int], b: Sequence[int], p: int) -> tuple[int, ...]:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _poly_sub(a: Sequence[int], b: Sequence[int], p: int) -> tuple[int, ...]:
    k = max(len(a), len(b))
    a = list(a) + [0] * (k - len(a))
    b = list(b) + [0] * (k - len(b))
    return _trim([(x - y) % p for x, y in zip(a, b)])


@dataclass(frozen=True)
class Poly:
    """Polynomial over F_p; ``coeffs[i]`` is the coefficient of s^i."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim(int(c) for c in self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            if i == 0:
                terms.append(str(c))
            else:
                mono = "s" if i == 1 else f"s^{i}"
                terms.append(mono if c == 1 else f"{c}{mono}")
        return "+".join(terms)


def is_irreducible(f: Poly, p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg(f)//2."""
    if not f.is_monic:
        raise NonMonic(f"{f} is not monic")
    d = f.degree
    if d < 1:
        raise NonMonic("irreducibility needs degree >= 1")
    c = f.coeffs
    if d >= 2 and c[0] == 0:
        return False
    for k in range(1, d // 2 + 1):
        for low in itertools.product(range(p), repeat=k):
            if not _poly_mod(c, low + (1,), p):
                return False
    return True


def _canonical_modulus(p: int, n: int) -> Poly:
    if n == 1:
        return Poly((0, 1))
    # (c_{n-1}, ..., c_0) in ascending lexicographic order
    for high_to_low in itertools.product(range(p), repeat=n):
        f = Poly(tuple(reversed(high_to_low)) + (1,))
        if is_irreducible(f, p):
            return f
    raise FieldError(f"no irreducible polynomial of degree {n} over F_{p}")


# ---------------------------------------------------------------------------
# field context


@dataclass(frozen=True)
class FieldCtx:
    """The field GF(p^n) = F_p[s] / (modulus)."""

    p: int
    n: int
    modulus: Poly
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        _check_params(self.p, self.n)
        if self.modulus.degree != self.n:
            raise FieldError(f"modulus {self.modulus} does not have degree {self.n}")
        if any(not 0 <= c < self.p for c in self.modulus.coeffs):
            raise FieldError("modulus coefficients must lie in [0, p)")
        if not is_irreducible(self.modulus, self.p):
            raise FieldError(f"modulus {self.modulus} is reducible over F_{self.p}")
        # s^k mod modulus for k = n .. 2n-2, used to fold products
        red = []
        for k in range(self.n, 2 * self.n - 1):
            r = _poly_mod((0,) * k + (1,), self.modulus.coeffs, self.p)
            red.append(tuple(r) + (0,) * (self.n - len(r)))
        self._cache["fold"] = red
        self._cache["powers"] = [self.p**i for i in range(self.n)]

    @property
    def q(self) -> int:
        return self.p**self.n

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.n}) mod {self.modulus}"

    # label <-> digit conversions

    def digits(self, label: int) -> tuple[int, ...]:
        p = self.p
        out = []
        for _ in range(self.n):
            label, d = divmod(label, p)
            out.append(d)
        return tuple(out)

    def label(self, digits: Sequence[int]) -> int:
        if len(digits) != self.n:
            raise FieldError(f"expected {self.n} digits, got {len(digits)}")
        return sum((int(d) % self.p) * w for d, w in zip(digits, self._cache["powers"]))

    def digit_array(self, labels) -> np.ndarray:
        """Digits (low-to-high) of each label, shape (..., n)."""
        labels = np.asarray(labels, dtype=np.int64)
        w = np.array(self._cache["powers"], dtype=np.int64)
        return (labels[..., None] // w) % self.p

    # element construction

    def __call__(self, value) -> "Gfe":
        return self.elem(value)

    def elem(self, value) -> "Gfe":
        if isinstance(value, Gfe):
            if value.ctx != self:
                raise CtxMismatch("element belongs to another field")
            return value
        if isinstance(value, str):
            return self.parse(value)
        if isinstance(value, (int, np.integer)):
            value = int(value)
            if not 0 <= value < self.q:
                raise FieldError(f"label {value} outside [0, {self.q})")
            return Gfe(self, value)
        raise FieldError(f"cannot interpret {value!r} as an element of {self!r}")

    def const(self, c: int) -> "Gfe":
        """The base-field constant c mod p."""
        return Gfe(self, int(c) % self.p)

    @property
    def zero(self) -> "Gfe":
        return Gfe(self, 0)

    @property
    def one(self) -> "Gfe":
        return Gfe(self, 1 % self.q)

    @property
    def s(self) -> "Gfe":
        """The class of the indeterminate s."""
        return self.from_poly((0, 1))

    def from_poly(self, coeffs: Sequence[int]) -> "Gfe":
        r = _poly_mod([c % self.p for c in coeffs], self.modulus.coeffs, self.p)
        return Gfe(self, self.label(tuple(r) + (0,) * (self.n - len(r))))

    def elements(self) -> Iterator["Gfe"]:
        for x in range(self.q):
            yield Gfe(self, x)

    def nonzero(self) -> Iterator["Gfe"]:
        for x in range(1, self.q):
            yield Gfe(self, x)

    # text formats

    def parse(self, text: str) -> "Gfe":
        t = text.strip().replace(" ", "")
        if not t:
            raise ParseError("empty element")
        if re.fullmatch(r"\d+", t):
            v = int(t)
            if v >= self.q:
                raise ParseError(f"label {v} outside [0, {self.q})")
            return Gfe(self, v)
        if t[0] == "[":
            if t[-1] != "]":
                raise ParseError(f"unterminated digit tuple {text!r}")
            parts = [x for x in re.split(r"[,;]", t[1:-1]) if x != ""]
            if len(parts) != self.n or not all(re.fullmatch(r"\d+", x) for x in parts):
                raise ParseError(f"expected {self.n} digits in {text!r}")
            digs = [int(x) for x in reversed(parts)]
            if any(d >= self.p for d in digs):
                raise ParseError(f"digit out of range in {text!r}")
            return Gfe(self, self.label(digs))
        return self.from_poly(_parse_poly(t, self.p))

    def format(self, a: "Gfe", style: str = "label") -> str:
        if style == "label":
            return str(a.label)
        if style == "digits":
            return "[" + ",".join(str(d) for d in reversed(a.digits)) + "]"
        if style == "poly":
            return str(Poly(a.digits))
        raise ValueError(f"unknown style {style!r}")

    # label-level arithmetic

    def add_labels(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        p = self.p
        return self.label([(x + y) % p for x, y in zip(self.digits(a), self.digits(b))])

    def neg_label(self, a: int) -> int:
        p = self.p
        return self.label([(-x) % p for x in self.digits(a)])

    def mul_labels(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        p, n = self.p, self.n
        if n == 1:
            return a * b % p
        da, db = self.digits(a), self.digits(b)
        prod = [0] * (2 * n - 1)
        for i, x in enumerate(da):
            if x:
                for j, y in enumerate(db):
                    prod[i + j] += x * y
        out = prod[:n]
        for k, fold in enumerate(self._cache["fold"]):
            c = prod[n + k] % p
            if c:
                for i in range(n):
                    out[i] += c * fold[i]
        return self.label([x % p for x in out])

    def inv_label(self, a: int) -> int:
        if a == 0:
            raise DivisionByZero("zero has no inverse")
        p = self.p
        if self.n == 1:
            return pow(a, -1, p)
        # extended Euclid on (a, modulus); track the coefficient of a
        r0, r1 = self.modulus.coeffs, _trim(self.digits(a))
        t0, t1 = (), (1,)
        while len(r1) > 1:
            q, r = _poly_divmod(r0, r1, p)
            r0, r1 = r1, r
            t0, t1 = t1, _poly_sub(t0, _poly_mul(q, t1, p), p)
        c = pow(r1[0], -1, p)
        t = _poly_mod([x * c for x in t1], self.modulus.coeffs, p)
        return self.label(tuple(t) + (0,) * (self.n - len(t)))

    def pow_label(self, a: int, e: int) -> int:
        if e < 0:
            a, e = self.inv_label(a), -e
        result, base = 1, a
        while e:
            if e & 1:
                result = self.mul_labels(result, base)
            base = self.mul_labels(base, base)
            e >>= 1
        return result


def _check_params(p: int, n: int) -> None:
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if n < 1:
        raise FieldError("degree must be at least 1")
    if n > MAX_DEGREE:
        raise DegreeTooLarge(f"degree {n} exceeds {MAX_DEGREE}")
    if p**n > MAX_ORDER:
        raise FieldTooLarge(f"field order {p}^{n} exceeds 2^31")


_TERM = re.compile(r"(\d*)\*?(?:s(?:\^(\d+))?)?")


def _parse_poly(t: str, p: int) -> list[int]:
    terms = re.findall(r"[+-]?[^+-]+", t)
    if "".join(terms) != t or not terms:
        raise ParseError(f"cannot parse polynomial {t!r}")
    coeffs: dict[int, int] = {}
    for term in terms:
        sign = -1 if term[0] == "-" else 1
        body = term.lstrip("+-")
        m = _TERM.fullmatch(body)
        if not body or m is None:
            raise ParseError(f"bad term {term!r}")
        has_s = "s" in body
        coef = int(m.group(1)) if m.group(1) else (1 if has_s else None)
        if coef is None:
            raise ParseError(f"bad term {term!r}")
        deg = (int(m.group(2)) if m.group(2) else 1) if has_s else 0
        coeffs[deg] = coeffs.get(deg, 0) + sign * coef
    out = [0] * (max(coeffs) + 1)
    for k, v in coeffs.items():
        out[k] = v % p
    return out


@lru_cache(maxsize=256)
def _make_ctx_cached(p: int, n: int, modulus: tuple[int, ...] | None) -> FieldCtx:
    _check_params(p, n)
    mod = Poly(modulus) if modulus is not None else _canonical_modulus(p, n)
    return FieldCtx(p, n, mod)


def make_ctx(p: int, n: int, modulus: Sequence[int] | Poly | None = None) -> FieldCtx:
    """Build GF(p^n).

    Without ``modulus`` the canonical one is used: the monic irreducible of
    degree n whose coefficient tuple (c_{n-1}, ..., c_0) is lexicographically
    smallest. A supplied modulus (low-to-high coefficients, or a Poly) is
    validated instead.
    """
    if isinstance(modulus, Poly):
        modulus = modulus.coeffs
    if modulus is not None:
        modulus = tuple(int(c) for c in modulus)
        if not Poly(modulus).is_monic:
            raise NonMonic(f"modulus {Poly(modulus)} is not monic")
    return _make_ctx_cached(int(p), int(n), modulus)


# ---------------------------------------------------------------------------
# elements


class Gfe:
    """An element of a FieldCtx, identified by its label."""

    __slots__ = ("ctx", "label")

    def __init__(self, ctx: FieldCtx, label: int):
        self.ctx = ctx
        self.label = label

    @property
    def digits(self) -> tuple[int, ...]:
        return self.ctx.digits(self.label)

    def vec(self) -> np.ndarray:
        """Digits stacked high-to-low, [x_{n-1}, ..., x_0]."""
        return np.array(self.digits[::-1], dtype=np.int64)

    def in_base_field(self) -> bool:
        return self.label < self.ctx.p

    def __bool__(self) -> bool:
        return self.label != 0

    def __int__(self) -> int:
        return self.label

    def _other(self, b) -> "Gfe":
        if isinstance(b, Gfe):
            if b.ctx is not self.ctx and b.ctx != self.ctx:
                raise CtxMismatch(f"{self.ctx!r} vs {b.ctx!r}")
            return b
        if isinstance(b, (int, np.integer)):
            return self.ctx.const(int(b))
        return NotImplemented

    def __eq__(self, b) -> bool:
        if isinstance(b, Gfe):
            return self.label == b.label and (self.ctx is b.ctx or self.ctx == b.ctx)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.label, self.ctx.p, self.ctx.n))

    def __add__(self, b):
        b = self._other(b)
        if b is NotImplemented:
            return b
        return Gfe(self.ctx, self.ctx.add_labels(self.label, b.label))

    __radd__ = __add__

    def __neg__(self):
        return Gfe(self.ctx, self.ctx.neg_label(self.label))

    def __sub__(self, b):
        b = self._other(b)
        if b is NotImplemented:
            return b
        return self + (-b)

    def __rsub__(self, b):
        b = self._other(b)
        if b is NotImplemented:
            return b
        return b + (-self)

    def __mul__(self, b):
        b = self._other(b)
        if b is NotImplemented:
            return b
        return Gfe(self.ctx, self.ctx.mul_labels(self.label, b.label))

    __rmul__ = __mul__

    def inv(self) -> "Gfe":
        return Gfe(self.ctx, self.ctx.inv_label(self.label))

    def __truediv__(self, b):
        b = self._other(b)
        if b is NotImplemented:
            return b
        return self * b.inv()

    def __rtruediv__(self, b):
        b = self._other(b)
        if b is NotImplemented:
            return b
        return b * self.inv()

    def __pow__(self, e: int) -> "Gfe":
        return Gfe(self.ctx, self.ctx.pow_label(self.label, int(e)))

    def __repr__(self) -> str:
        return f"Gfe({self.label} in GF({self.ctx.p}^{self.ctx.n}))"

    def __str__(self) -> str:
        return self.ctx.format(self, "poly")


def arith(op: str, a: Gfe, b: Gfe | int | None = None) -> Gfe:
    """Dispatch one of add, neg, mul, inv, pow, div."""
    if op == "add":
        return a + b
    if op == "neg":
        return -a
    if op == "mul":
        return a * b
    if op == "inv":
        return a.inv()
    if op == "pow":
        return a ** int(b)
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def in_base_field(a: Gfe) -> bool:
    return a.in_base_field()


def minimal_poly(a: Gfe) -> Poly:
    """Monic polynomial of least degree vanishing at ``a``.

    Found from the first F_p-linear dependence among 1, a, a^2, ...
    """
    ctx = a.ctx
    p = ctx.p
    cols = [ctx.one.vec()]
    power = ctx.one
    while True:
        power = power * a
        k = len(cols)
        aug = np.column_stack(cols + [power.vec()])
        r, piv = _kernels.rref(aug, p)
        if k not in piv:
            # a^k = sum_i c_i a^i with c read off the reduced augmented column
            c = [int(r[i, k]) for i in range(k)]
            return Poly(tuple((-x) % p for x in c) + (1,))
        cols.append(power.vec())


def quadratic_nonresidue(p: int) -> int:
    """Smallest c in [2, p) that is not a square mod p."""
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if p == 2:
        raise NoNonResidue("every element of F_2 is a square")
    squares = {x * x % p for x in range(p)}
    return next(c for c in range(2, p) if c not in squares)
