"""Command-line front end.

Exit codes:
    0  success (verification passed, census checks passed)
    1  verification, round-trip or census check failed
    2  usage, parse or field errors
    3  channel infeasible for the requested scheme
    4  scheme conditions not met
    5  census too large for exhaustive enumeration
    6  precoder search exhausted
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import census, ic3, xch
from .errors import (
    ChannelError,
    ConditionsNotMet,
    FFAlignError,
    FieldError,
    Infeasible,
    LinAlgError,
    ParseError,
    SearchExhausted,
    TooLargeForExhaustive,
    VerificationFailed,
)
from .fplinalg import rep_matrix
from .gf import FieldCtx, make_ctx, minimal_poly

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_CONDITIONS = 4
EXIT_TOO_LARGE = 5
EXIT_SEARCH = 6


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# input and output


def _dump(obj, args) -> None:
    if getattr(args, "format", "json") == "csv":
        text = _flat_csv(obj)
    else:
        text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _flat_csv(obj) -> str:
    rows = []

    def walk(prefix, x):
        if isinstance(x, dict):
            for k in sorted(x):
                walk(f"{prefix}.{k}" if prefix else str(k), x[k])
        else:
            rows.append((prefix, json.dumps(x) if isinstance(x, list) else x))

    walk("", obj)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    return buf.getvalue()


def _read_json(args) -> dict:
    if args.json is not None:
        text = args.json
    elif args.input is not None:
        text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text()
    else:
        raise UsageError("give a channel or scheme with --in FILE or --json TEXT")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ParseError("top-level JSON value must be an object")
    return data


def _parse_modulus(text: str | None):
    if text is None:
        return None
    try:
        return [int(c) for c in text.replace(" ", "").split(",") if c != ""]
    except ValueError:
        raise ParseError(f"modulus must be comma-separated coefficients, got {text!r}") from None


def _ctx_from(data: dict) -> FieldCtx:
    try:
        return make_ctx(int(data["p"]), int(data["n"]), data.get("modulus"))
    except (KeyError, TypeError):
        raise ParseError("channel JSON needs integer fields p and n") from None


def _matrix(data: dict, size: int) -> list[list[int]]:
    mat = data.get("matrix")
    if (
        not isinstance(mat, list)
        or len(mat) != size
        or any(not isinstance(r, list) or len(r) != size for r in mat)
        or any(not isinstance(x, int) or isinstance(x, bool) for r in mat for x in r)
    ):
        raise ParseError(f"matrix must be a {size}x{size} list of integer labels")
    return mat


def _channel(kind: str, data: dict):
    ctx = _ctx_from(data)
    for row in data.get("matrix", []) or []:
        for x in row if isinstance(row, list) else []:
            if isinstance(x, int) and not 0 <= x < ctx.q:
                raise ParseError(f"label {x} outside [0, {ctx.q})")
    if kind == "xch":
        return xch.XChannel.from_matrix(ctx, _matrix(data, 2))
    return ic3.IC3Channel.from_matrix(ctx, _matrix(data, 3))


def _channel_json(ch) -> dict:
    ctx = ch.ctx
    return {"p": ctx.p, "n": ctx.n, "modulus": list(ctx.modulus.coeffs), "matrix": ch.gains}


def _load_channel(kind: str, args):
    data = _read_json(args)
    if "channel" in data:
        data = data["channel"]
    if args.p is not None:
        data["p"] = args.p
    if args.n is not None:
        data["n"] = args.n
    if args.modulus is not None:
        data["modulus"] = _parse_modulus(args.modulus)
    return _channel(kind, data)


def _load_scheme(kind: str, args):
    """Scheme and channel from a construct output, or construct one from a channel."""
    data = _read_json(args)
    if "precoders" not in data:
        ch = _load_channel(kind, args)
        return _construct(kind, ch, getattr(args, "scheme", "auto")), ch
    if "channel" not in data:
        raise ParseError("scheme JSON lacks the embedded channel")
    ch = _channel(kind, data["channel"])
    try:
        scheme = (xch.XScheme if kind == "xch" else ic3.ICScheme).from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed scheme JSON: {exc}") from None
    return scheme, ch


# ---------------------------------------------------------------------------
# field


def cmd_field(args) -> int:
    ctx = make_ctx(args.p, args.n, _parse_modulus(args.modulus))
    out = {"p": ctx.p, "n": ctx.n, "q": ctx.q, "modulus": str(ctx.modulus), "modulus_coeffs": list(ctx.modulus.coeffs)}
    if args.element is not None:
        a = ctx.parse(args.element)
        subfields = [d for d in range(1, ctx.n + 1) if ctx.n % d == 0 and a ** (ctx.p**d) == a]
        out["element"] = {
            "label": a.label,
            "digits": ctx.format(a, "digits"),
            "poly": ctx.format(a, "poly"),
            "matrix": rep_matrix(a).a.tolist(),
            "minimal_poly": str(minimal_poly(a)),
            "in_base_field": a.in_base_field(),
            "subfield_degree": subfields[0],
        }
    if args.format == "json":
        _dump(out, args)
        return EXIT_OK
    lines = [f"GF({ctx.p}^{ctx.n}) = F_{ctx.p}[s] / ({out['modulus']})"]
    e = out.get("element")
    if e:
        lines += [
            f"element      {e['label']}  digits {e['digits']}  poly {e['poly']}",
            "matrix",
            *("  " + " ".join(str(x) for x in row) for row in e["matrix"]),
            f"minimal poly {e['minimal_poly']}",
            f"in F_{ctx.p}       {str(e['in_base_field']).lower()}",
            f"subfield     GF({ctx.p}^{e['subfield_degree']})",
        ]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# channels


def _construct(kind: str, ch, scheme: str):
    if kind == "xch":
        if scheme == "aligned" and not any(ch.zero_pattern()):
            xch._require_feasible(xch.normalize(ch).h)
        return xch.construct(ch)
    if scheme == "auto" or ch.zeros():
        if scheme != "auto":
            raise ConditionsNotMet(f"scheme {scheme!r} needs a fully connected channel")
        return ic3.construct_ic(ch)
    norm = ic3.normalize_ic(ch)
    build = {"eigen": ic3.construct_eigen, "odd_powers": ic3.construct_odd, "p2": ic3.construct_p2}[scheme]
    s = build(norm)
    return s


def _scheme_json(scheme, ch) -> dict:
    out = scheme.to_json()
    out["channel"] = _channel_json(ch)
    return out


def _verify(kind: str, scheme, ch) -> dict:
    try:
        return (xch.verify_x if kind == "xch" else ic3.verify_ic)(scheme, ch)
    except VerificationFailed as exc:
        return {"pass": False, "reason": str(exc), "mode": scheme.mode}


def _messages(kind: str, scheme, spec: str, blocks: int):
    p = scheme.ctx.p
    names = [n for n, _, _ in xch.MESSAGES] if kind == "xch" else ["1", "2", "3"]
    streams = scheme.streams if kind == "xch" else dict(zip(names, scheme.streams))
    if spec.startswith("random:"):
        try:
            seed = int(spec.split(":", 1)[1])
        except ValueError:
            raise ParseError(f"bad message seed in {spec!r}") from None
        rng = np.random.default_rng(seed)
        return {k: rng.integers(0, p, size=(blocks, streams[k])) for k in names}
    data = json.loads(Path(spec).read_text())
    if isinstance(data, list):
        data = dict(zip(names, data))
    msgs = {}
    for k in names:
        arr = np.array(data.get(k, []), dtype=np.int64)
        if arr.size == 0:
            arr = np.zeros((1, streams[k]), dtype=np.int64)
        arr = arr.reshape(-1, streams[k]) if streams[k] else arr.reshape(-1, 0)
        if np.any(arr < 0) or np.any(arr >= p):
            raise ParseError(f"message {k} has symbols outside F_{p}")
        msgs[k] = arr
    rows = {m.shape[0] for m in msgs.values() if m.shape[1]}
    if len(rows) > 1:
        raise ParseError("every message needs the same number of blocks")
    t = rows.pop() if rows else 1
    return {k: (v if v.shape[1] else np.zeros((t, 0), dtype=np.int64)) for k, v in msgs.items()}


def cmd_channel(kind: str, args) -> int:
    action = args.action
    if action == "classify":
        ch = _load_channel(kind, args)
        _dump(xch.classify(ch) if kind == "xch" else ic3.classify_ic(ch), args)
        return EXIT_OK
    if action == "construct":
        ch = _load_channel(kind, args)
        scheme = _construct(kind, ch, args.scheme)
        _dump(_scheme_json(scheme, ch), args)
        return EXIT_OK
    scheme, ch = _load_scheme(kind, args)
    report = _verify(kind, scheme, ch)
    if action == "verify":
        _dump(report, args)
        return EXIT_OK if report["pass"] else EXIT_FAILED
    msgs = _messages(kind, scheme, args.messages, args.blocks)
    if not report["pass"]:
        _dump({"match": False, "verify": report}, args)
        return EXIT_FAILED
    if kind == "xch":
        decoded = xch.simulate_x(scheme, ch, msgs)
    else:
        out = ic3.simulate_ic(scheme, ch, [msgs[k] for k in ("1", "2", "3")])
        decoded = dict(zip(("1", "2", "3"), out))
    pairs = {k: {"sent": msgs[k].tolist(), "decoded": decoded[k].tolist()} for k in msgs}
    match = all(np.array_equal(msgs[k], decoded[k]) for k in msgs)
    _dump({"match": match, "mode": scheme.mode, "sum_rate": str(scheme.sum_rate), "messages": pairs}, args)
    return EXIT_OK if match else EXIT_FAILED


# ---------------------------------------------------------------------------
# census


def cmd_census(args) -> int:
    target = args.target or ("x_normalized_h" if args.kind == "x" else "ic_normalized")
    if (args.kind == "x") != target.startswith("x_"):
        raise UsageError(f"target {target} does not belong to census {args.kind}")
    mode = "sample" if args.sample is not None else "exhaustive"
    spec = census.CensusSpec(
        p=args.p,
        n=args.n,
        target=target,
        mode=mode,
        count=args.sample or 0,
        seed=args.seed,
        threshold=args.threshold,
        workers=args.workers,
        modulus=tuple(_parse_modulus(args.modulus)) if args.modulus else None,
    )
    report = census.run_census(spec)
    if args.out:
        base = Path(args.out)
        base.with_suffix(".json").write_text(report.dumps())
        base.with_suffix(".csv").write_text(report.to_csv())
    else:
        sys.stdout.write(report.to_csv() if args.format == "csv" else report.dumps())
    if args.check and not report.passed:
        return EXIT_FAILED
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _io_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--out", help="write output here instead of standard output")
    sp.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ffalign", description="Interference alignment over finite fields.")
    sub = ap.add_subparsers(dest="command", required=True)

    f = sub.add_parser("field", help="inspect GF(p^n) and one of its elements")
    f.add_argument("p", type=int)
    f.add_argument("n", type=int)
    f.add_argument("element", nargs="?", help="label, digit tuple [d_{n-1},...,d_0] or polynomial in s")
    f.add_argument("--modulus", help="low-to-high coefficients, comma separated")
    f.add_argument("--out")
    f.add_argument("--format", choices=("text", "json"), default="text")

    for kind, title in (("xch", "two-user X channel"), ("ic3", "three-user interference channel")):
        c = sub.add_parser(kind, help=title)
        c.add_argument("action", choices=("classify", "construct", "verify", "simulate"))
        c.add_argument("--in", dest="input", help="channel or scheme JSON file, '-' for stdin")
        c.add_argument("--json", help="channel or scheme JSON given inline")
        c.add_argument("--p", type=int)
        c.add_argument("--n", type=int)
        c.add_argument("--modulus")
        schemes = ("auto", "aligned") if kind == "xch" else ("auto", "eigen", "odd_powers", "p2")
        c.add_argument("--scheme", choices=schemes, default="auto", help="insist on one construction")
        c.add_argument("--messages", default="random:0", help="random:SEED or a JSON file of symbols")
        c.add_argument("--blocks", type=int, default=16, help="blocks drawn for random messages")
        c.add_argument("--seed", type=int, default=0)
        _io_flags(c)

    s = sub.add_parser("census", help="count channel classes")
    s.add_argument("kind", choices=("x", "ic3"))
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--modulus")
    s.add_argument("--target", choices=census.TARGETS)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--exhaustive", action="store_true")
    g.add_argument("--sample", type=int, metavar="N")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threshold", type=int, default=1 << 20)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--check", action="store_true", help="exit 1 unless every closed-form comparison passes")
    s.add_argument("--out", help="path prefix; writes PREFIX.json and PREFIX.csv")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.command == "field":
            return cmd_field(args)
        if args.command == "census":
            return cmd_census(args)
        return cmd_channel(args.command, args)
    except TooLargeForExhaustive as exc:
        code, msg = EXIT_TOO_LARGE, exc
    except Infeasible as exc:
        code, msg = EXIT_INFEASIBLE, exc
    except ConditionsNotMet as exc:
        code, msg = EXIT_CONDITIONS, exc
    except SearchExhausted as exc:
        code, msg = EXIT_SEARCH, exc
    except (UsageError, ParseError, FieldError, ChannelError, LinAlgError, OSError, ValueError) as exc:
        code, msg = EXIT_USAGE, exc
    except FFAlignError as exc:
        code, msg = EXIT_FAILED, exc
    print(f"ffalign: {type(msg).__name__}: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
