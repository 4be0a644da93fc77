"""Acceptance criteria 1-11, each at its stated tolerance and time limit.

Every test reports one line through the ``record`` fixture; the lines are
repeated in the terminal summary. Criteria that cannot hold are asserted as
written and marked xfail(strict=True), so they show up as FAIL lines without
turning the run red.
"""
import itertools
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

from ffalign import census, ic3, xch
from ffalign.census import CensusSpec, run_census
from ffalign.errors import FullyConnected, SearchExhausted
from ffalign.fplinalg import cols_from_elements, rep_matrix
from ffalign.gf import is_prime, make_ctx
from ffalign.network import received_columns
from ffalign import _kernels

S = sympy.Symbol("s")


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def x_channel(ctx, a, b, c, d):
    return xch.XChannel.from_matrix(ctx, [[a, b], [c, d]])


def x_roundtrip(scheme, ch, msgs):
    out = xch.simulate_x(scheme, ch, msgs)
    return all(np.array_equal(msgs[k], out[k]) for k in msgs)


def ic_roundtrip(scheme, ch, rng, blocks=4):
    msgs = [rng.integers(0, ch.ctx.p, size=(blocks, d)) for d in scheme.streams]
    out = ic3.simulate_ic(scheme, ch, msgs)
    return all(np.array_equal(a, b) for a, b in zip(msgs, out))


def all_messages(p, streams):
    """Every combination of F_p symbols, one block per row, split per message."""
    total = sum(streams.values())
    grid = np.array(list(itertools.product(range(p), repeat=total)), dtype=np.int64)
    out, k = {}, 0
    for name, d in streams.items():
        out[name] = grid[:, k : k + d]
        k += d
    return out


# ---------------------------------------------------------------------------
# 1. field correctness


def _tables(ctx):
    q = ctx.q
    add = np.array([[ctx.add_labels(a, b) for b in range(q)] for a in range(q)])
    mul = np.array([[ctx.mul_labels(a, b) for b in range(q)] for a in range(q)])
    return add, mul


def _axioms(ctx) -> bool:
    q = ctx.q
    A, M = _tables(ctx)
    r = np.arange(q)
    ok = np.array_equal(A, A.T) and np.array_equal(M, M.T)
    ok &= np.array_equal(A[A], A[r[:, None, None], A[None, :, :]])  # (a+b)+c == a+(b+c)
    ok &= np.array_equal(M[M], M[r[:, None, None], M[None, :, :]])
    ok &= np.array_equal(M[r[:, None, None], A[None, :, :]], A[M[:, :, None], M[:, None, :]])
    ok &= np.array_equal(A[0], r) and np.array_equal(M[1], r) and not M[0].any()
    ok &= all((A[a] == 0).sum() == 1 for a in range(q))
    ok &= all((M[a] == 1).sum() == 1 for a in range(1, q))
    return bool(ok)


def _matrix_by_poly_product(ctx, label):
    """Columns vec(h * s^(n-1-j)) from sympy polynomial products."""
    p, n = ctx.p, ctx.n
    mod = sympy.Poly(list(reversed(ctx.modulus.coeffs)), S, modulus=p)
    h = sympy.Poly(list(reversed(ctx.digits(label))), S, modulus=p)
    cols = []
    for j in range(n):
        r = (h * sympy.Poly(S ** (n - 1 - j), S, modulus=p)).rem(mod)
        c = [int(x) % p for x in r.all_coeffs()]
        cols.append([0] * (n - len(c)) + c)  # high-to-low
    return np.array(cols).T.tolist()


def test_criterion_1_field_correctness(record):
    with Timer() as t:
        axioms = {pn: _axioms(make_ctx(*pn)) for pn in [(2, 2), (2, 3), (3, 2), (3, 3), (5, 2)]}
        frob = all(a ** ctx.q == a for ctx in map(lambda pn: make_ctx(*pn), axioms) for a in ctx.elements())
        gf27 = make_ctx(3, 3)
        modulus_ok = gf27.modulus.coeffs == (1, 2, 0, 1) and str(gf27.modulus) == "s^3+2s+1"
        oracle = _matrix_by_poly_product(gf27, 22)
        matrix_ok = rep_matrix(gf27(22)).tolist() == oracle == [[0, 1, 2], [2, 0, 1], [2, 1, 1]]
    ok = all(axioms.values()) and frob and modulus_ok and matrix_ok and t.elapsed < 5
    record("1", ok, f"axioms {sum(axioms.values())}/5 fields, a^q=a {frob}, modulus s^3+2s+1 {modulus_ok}, "
           f"h=22 matrix {oracle} {matrix_ok}, {t.elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------------------
# 2. powers of h independent exactly when h is outside F_p (prime n)


def _powers_independent(h):
    n = h.ctx.n
    return cols_from_elements([h**k for k in range(n)]).rank() == n


def test_criterion_2_power_basis(record):
    with Timer() as t:
        prime_ok = {}
        for n in (2, 3, 5):
            for p in (2, 3):
                ctx = make_ctx(p, n)
                prime_ok[(p, n)] = all(_powers_independent(h) == (not h.in_base_field()) for h in ctx.elements())
        composite = {}
        for p in (2, 3):
            ctx = make_ctx(p, 4)
            witnesses = [h for h in ctx.elements() if not h.in_base_field() and not _powers_independent(h)]
            # each witness generates a proper subfield, here GF(p^2)
            composite[p] = bool(witnesses) and all(h ** (p * p) == h for h in witnesses)
    ok = all(prime_ok.values()) and all(composite.values()) and t.elapsed < 30
    record("2", ok, f"prime n {sum(prime_ok.values())}/6 exact, n=4 subfield witnesses {composite}, {t.elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------------------
# 3. degenerate X fraction


def test_criterion_3_degenerate_fraction(record):
    with Timer() as t:
        bad, runs, oracle_checked = [], 0, 0
        for p in range(2, 4097):
            if not is_prime(p):
                continue
            n = 1
            while p**n <= 4096:
                r = run_census(CensusSpec(p, n, "x_normalized_h"))
                runs += 1
                want = Fraction(p - 1, p**n - 1)
                if r.fractions["degenerate"] != want or not r.passed:
                    bad.append((p, n))
                if n >= 2:
                    # independent count: h lies in F_p iff h^p == h
                    ctx = make_ctx(p, n)
                    fixed = sum(1 for x in range(1, ctx.q) if ctx.pow_label(x, p) == x)
                    oracle_checked += 1
                    if fixed != r.counts["degenerate"]:
                        bad.append((p, n, "frobenius"))
                n += 1
    ok = not bad and t.elapsed < 60
    record("3", ok, f"{runs} (p,n) pairs exact, {oracle_checked} cross-checked by Frobenius, mismatches {bad}, {t.elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 4. X channel achieves 4/3


def test_criterion_4_x_achievability(record):
    details, ok = [], True
    with Timer() as t:
        for p, n, rank in ((3, 3, 3), (3, 2, 6)):
            ctx = make_ctx(p, n)
            hs = [h for h in ctx.nonzero() if not h.in_base_field()]
            good = 0
            for h in hs:
                ch = x_channel(ctx, 1, 1, h.label, 1)
                s = xch.construct(ch)
                rep = xch.verify_x(s, ch)
                msgs = all_messages(p, s.streams)
                if rep["rank_S1"] == rep["rank_S2"] == rank and s.sum_rate == Fraction(4, 3) and x_roundtrip(s, ch, msgs):
                    good += 1
            details.append(f"GF({p}^{n}) {good}/{len(hs)} exhaustive round-trips")
            ok &= good == len(hs) == {3: 24, 2: 6}[n]
        rng = np.random.default_rng(2024)
        for p, n in ((3, 4), (5, 3)):
            ctx = make_ctx(p, n)
            hs = [h for h in ctx.nonzero() if not h.in_base_field()]
            every_h = 0
            for h in hs:
                ch = x_channel(ctx, 1, 1, h.label, 1)
                sc = xch.construct(ch)
                every_h += xch.verify_x(sc, ch)["rank_S1"] == sc.m * n and sc.sum_rate == Fraction(4, 3)
            sampled = good = 0
            while sampled < 1000:
                g = rng.integers(1, ctx.q, size=4).tolist()
                ch = x_channel(ctx, *g)
                if xch.normalize(ch).h.in_base_field():
                    continue
                sampled += 1
                s = xch.construct(ch)
                rep = xch.verify_x(s, ch)
                msgs = {k: rng.integers(0, p, size=(2, d)) for k, d in s.streams.items()}
                if (
                    rep["rank_S1"] == rep["rank_S2"] == s.m * n
                    and s.sum_rate == Fraction(4, 3)
                    and x_roundtrip(s, ch, msgs)
                ):
                    good += 1
            details.append(f"GF({p}^{n}) all {every_h}/{len(hs)} h and {good}/{sampled} raw channels")
            ok &= every_h == len(hs) and good == sampled
    ok &= t.elapsed < 300
    record("4", ok, ", ".join(details) + f", {t.elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 5. determinants of the F_{p^2} signal spaces


def test_criterion_5_p2_determinants(record):
    with Timer() as t:
        checked, bad = 0, []
        for p in (3, 5, 7):
            ctx = make_ctx(p, 2)
            for h in ctx.nonzero():
                if h.in_base_field():
                    continue
                S1, S2, c, h1, h0 = xch.p2_signal_matrices(h)
                d1 = int(sympy.Matrix(S1.tolist()).det()) % p
                d2 = int(sympy.Matrix(S2.tolist()).det()) % p
                want1, want2 = c * h1 * h1 % p, h1 * h1 * (c * h1 * h1 - h0 * h0) % p
                if not (d1 == want1 == _kernels.det(S1, p) and d2 == want2 == _kernels.det(S2, p) and d1 and d2):
                    bad.append((p, h.label))
                checked += 1
    ok = not bad and checked == 6 + 20 + 42 and t.elapsed < 10
    record("5", ok, f"{checked} elements, mismatches {bad}, {t.elapsed:.2f}s")
    assert ok


# ---------------------------------------------------------------------------
# 6. odd n, powers of hbar


def _covering(a_vals, b_vals):
    """Tuples whose three coordinates together take every value of a, b, b."""
    k = max(len(a_vals), len(b_vals))
    return [(int(a_vals[i % len(a_vals)]), int(b_vals[i % len(b_vals)]), int(b_vals[(i + 1) % len(b_vals)])) for i in range(k)]


def _odd_passing(ctx, hb):
    """Values of hbar11 and of hbar22 (= hbar33) passing the odd-n tests for this hbar."""
    if not ic3.hbar_powers_independent(ctx(hb)):
        return np.array([], dtype=int), np.array([], dtype=int)
    t = ic3.predicate_table(ctx, hb)
    return np.flatnonzero(t["odd_A"]), np.flatnonzero(t["odd_B"])


def test_criterion_6_odd_powers_gf27(record):
    ctx = make_ctx(3, 3)
    q, p = ctx.q, ctx.p
    rng = np.random.default_rng(6)
    passing = verified = simulated = consistent = 0
    problems = []
    with Timer() as t:
        for hb in range(q):
            A, B = _odd_passing(ctx, hb)
            # membership of A x B x B agrees with the per-tuple classifier
            for tup in rng.integers(0, q, size=(200, 3)).tolist():
                rep = ic3.classify_normalized(ic3.ICNormalization.of(ctx, *tup, hb))
                cond = all(c["pass"] for c in rep["conditions"]["odd_powers"])
                inside = tup[0] in A and tup[1] in B and tup[2] in B
                consistent += cond == inside
                if cond != inside:
                    problems.append(("membership", hb, tup))
            if not len(A) or not len(B):
                continue
            passing += len(A) * len(B) ** 2
            reps = _covering(A, B)
            ref = None
            for tup in reps:
                norm = ic3.ICNormalization.of(ctx, *tup, hb)
                s = ic3.construct_odd(norm)
                ch = ic3.normalized_channel(ctx, *tup, hb)
                rep = ic3.verify_ic(s, ch)
                if ref is None:
                    ref = s
                same = all(np.array_equal(a, b) for a, b in zip(s.precoders, ref.precoders))
                msgs = all_messages(p, {"1": 2, "2": 1, "3": 1})
                out = ic3.simulate_ic(s, ch, [msgs["1"], msgs["2"], msgs["3"]])
                rt = all(np.array_equal(a, b) for a, b in zip([msgs["1"], msgs["2"], msgs["3"]], out))
                if not (same and rep["rank_S"] == [3, 3, 3] and s.sum_rate == Fraction(4, 3) and rt):
                    problems.append(("scheme", hb, tup))
                simulated += 1
            # The precoders depend on hbar only, and destination k's signal
            # space depends on hbar_kk only, so ranking S_k for every passing
            # value of hbar_kk covers every tuple in A x B x B.
            V = ref.precoders
            for k, values in ((0, A), (1, B), (2, B)):
                others = [i for i in range(3) if i != k]
                gains = ic3.normalized_channel(ctx, 1, 1, 1, hb).gains[k]
                interf = np.hstack([received_columns(ctx, gains[i], V[i]) for i in others])
                stack = np.stack([np.hstack([received_columns(ctx, int(v), V[k]), interf]) for v in values])
                desired = np.stack([received_columns(ctx, int(v), V[k]) for v in values])
                full = _kernels.batch_rank(stack, p)
                own = _kernels.batch_rank(desired, p)
                i_rank = _kernels.rank(interf, p)
                if not (np.all(full == 3) and np.all(own == V[k].shape[1]) and i_rank == 3 - V[k].shape[1]):
                    problems.append(("rank", hb, k))
                verified += len(values)
    total = q**4
    fraction = Fraction(passing, total)
    bound = census.cubic_bound(p)
    cen = run_census(CensusSpec(3, 3, "ic_normalized"))
    ok = (
        not problems
        and passing == cen.conditions["odd_powers"]
        and fraction >= bound
        and t.elapsed < 600
    )
    record(
        "6",
        ok,
        f"{passing} passing tuples of {total} ({fraction} >= {bound}), {verified} per-value rank checks, "
        f"{simulated} covering schemes round-tripped with all 81 message sets, {consistent} classifier spot checks, "
        f"problems {problems[:3]}, {t.elapsed:.1f}s",
    )
    assert ok


# ---------------------------------------------------------------------------
# 7. eigenvector case


def _eigen_tuples(p, n, rng, limit=10**6, sample=10**4):
    q = p**n
    outside = np.arange(p, q)
    count = (p - 1) * len(outside) ** 3
    if count <= limit:
        for hb in range(1, p):
            for a, b, c in itertools.product(outside.tolist(), repeat=3):
                yield (a, b, c, hb)
        return
    for _ in range(sample):
        a, b, c = rng.choice(outside, size=3).tolist()
        yield (a, b, c, int(rng.integers(1, p)))


def test_criterion_7_eigen_case(record):
    rng = np.random.default_rng(7)
    details, ok = [], True
    with Timer() as t:
        for n in (2, 3):
            ctx = make_ctx(5, n)
            good = total = 0
            for tup in _eigen_tuples(5, n, rng):
                total += 1
                norm = ic3.ICNormalization.of(ctx, *tup)
                s = ic3.construct_eigen(norm)
                ch = ic3.normalized_channel(ctx, *tup)
                # verify_ic checks span equality of the two interferers at each destination
                rep = ic3.verify_ic(s, ch)
                if rep["pass"] and s.sum_rate == Fraction(3, 2) and ic_roundtrip(s, ch, rng, blocks=1):
                    good += 1
            details.append(f"n={n}: {good}/{total} {'exhaustive' if n == 2 else 'sampled'}")
            ok &= good == total
        cen = run_census(CensusSpec(5, 2, "ic_normalized"))
        measured = Fraction(cen.conditions["eigen"], cen.total)
        ok &= measured == census.eigen_fraction(5, 2) == Fraction(64, 625)
    ok &= t.elapsed < 300
    record("7", ok, ", ".join(details) + f", exhaustive fraction {measured} vs 64/625, {t.elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 8. n = 2, five channel uses


def test_criterion_8_p2_scheme(record):
    rng = np.random.default_rng(8)
    details, ok = [], True
    with Timer() as t:
        for p in (5, 7):
            ctx = make_ctx(p, 2)
            good = sampled = 0
            while sampled < 1000:
                ch = ic3.IC3Channel.from_matrix(ctx, rng.integers(1, ctx.q, size=(3, 3)).tolist())
                norm = ic3.normalize_ic(ch)
                if not all(c["pass"] for c in ic3.p2_conditions(norm)):
                    continue
                sampled += 1
                s = ic3.construct_p2(norm)  # records the six column alignments or raises
                rep = ic3.verify_ic(s, ch)
                if (
                    rep["rank_S"] == [10, 10, 10]
                    and s.streams == [4, 4, 4]
                    and s.m == 5
                    and s.sum_rate == Fraction(6, 5)
                    and ic_roundtrip(s, ch, rng, blocks=2)
                ):
                    good += 1
            details.append(f"p={p}: {good}/{sampled} raw channels")
            ok &= good == sampled
        for p in (2, 3):
            ctx = make_ctx(p, 2)
            built = failed = verified = 0
            for tup in itertools.product(range(ctx.q), repeat=4):
                norm = ic3.ICNormalization.of(ctx, *tup)
                if not tup[3] or not all(c["pass"] for c in ic3.p2_conditions(norm)):
                    continue
                try:
                    s = ic3.construct_p2(norm)
                except SearchExhausted:
                    failed += 1
                    continue
                built += 1
                ch = ic3.normalized_channel(ctx, *tup)
                verified += ic3.verify_ic(s, ch)["rank_S"] == [10, 10, 10] and ic_roundtrip(s, ch, rng)
            details.append(f"p={p}: search built {built}, exhausted {failed}, verified {verified}")
            ok &= verified == built
    ok &= t.elapsed < 600
    record("8", ok, ", ".join(details) + f", {t.elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 9. zero patterns

LINKS = [(j, i) for j in (1, 2, 3) for i in (1, 2, 3)]


def _x_zero_patterns():
    ctx = make_ctx(3, 3)
    expected = {0b0110: 2, 0b1001: 2, 0b1111: 0}
    good = 0
    for mask in range(16):
        g = [0 if mask >> k & 1 else [1, 1, 5, 1][k] for k in range(4)]
        ch = x_channel(ctx, *g)
        rep = xch.classify(ch)
        want = Fraction(4, 3) if mask == 0 else Fraction(expected.get(mask, 1))
        s = xch.construct(ch)
        msgs = all_messages(3, s.streams)
        if Fraction(rep["C_linear"]) == want == s.sum_rate and xch.verify_x(s, ch)["pass"] and x_roundtrip(s, ch, msgs):
            good += 1
    return good


def _ic_pattern_cases():
    counts = {}
    full = 0
    for mask in range(512):
        zeros = {LINKS[k] for k in range(9) if mask >> k & 1}
        try:
            case = ic3.zero_case(zeros)["case"]
        except FullyConnected:
            full += 1
            continue
        counts[case] = counts.get(case, 0) + 1
        if case == 7 and ic3.canonicalize(zeros) is None:
            counts["uncanonical"] = counts.get("uncanonical", 0) + 1
    return counts, full


def _structure_schemes(rng):
    ctx = make_ctx(5, 2)
    fast = slow = bad = 0
    for mask in range(1, 512):
        zeros = {LINKS[k] for k in range(9) if mask >> k & 1}
        if ic3.zero_case(zeros)["case"] != 7:
            continue
        s_, sigma = ic3.canonicalize(zeros)
        for _ in range(6):
            g = rng.integers(1, ctx.q, size=9)
            for k in range(9):
                if mask >> k & 1:
                    g[k] = 0
            ch = ic3.IC3Channel.from_matrix(ctx, g.reshape(3, 3).tolist())
            canon = ch.relabel(sigma)
            conditions_hold = True
            if s_.conditions:
                a, d = ic3.tree_scalings(canon, s_.free)
                conditions_hold = all(
                    not (canon.h[k - 1][k - 1] * a[k - 1] / d[k - 1]).in_base_field() for k in s_.conditions
                )
            s = ic3.construct_ic(ch)
            rep = ic3.verify_ic(s, ch)
            rt = ic_roundtrip(s, ch, rng)
            if conditions_hold and s.sum_rate == Fraction(3, 2) and rep["pass"] and rt:
                fast += 1
            elif not conditions_hold and s.sum_rate == 1 and rep["pass"] and rt:
                slow += 1
            else:
                bad += 1
    return fast, slow, bad


def test_criterion_9_zero_patterns(record):
    rng = np.random.default_rng(9)
    with Timer() as t:
        x_good = _x_zero_patterns()
        counts, full = _ic_pattern_cases()
        fast, slow, bad = _structure_schemes(rng)
    cases_ok = counts == {1: 64, 2: 192, 3: 192, 4: 1, 5: 21, 6: 15, 7: 26} and full == 1
    ok = x_good == 16 and cases_ok and bad == 0 and fast > 0 and t.elapsed < 300
    record(
        "9",
        ok,
        f"X 16 patterns: {x_good}/16 verified; IC 511 zero patterns -> cases {counts} plus 1 fully connected; "
        f"case-7 schemes at (5,2): {fast} at 3/2 with conditions, {slow} at 1 without, {bad} wrong; {t.elapsed:.1f}s",
    )
    assert ok


@pytest.mark.xfail(strict=True, reason="the 20 three-cross-zero patterns form 4 relabeling classes, not 5")
def test_criterion_9_three_cross_zero_classes(record):
    cross = [z for z in LINKS if z[0] != z[1]]
    pats = [frozenset(c) for c in itertools.combinations(cross, 3)]
    classes = {min(tuple(sorted(ic3.relabel_zeros(z, s))) for s in ic3.PERMUTATIONS) for z in pats}
    onto = sorted({ic3.canonicalize(z)[0].name for z in pats if ic3.zero_case(z)["case"] == 7})
    ok = len(pats) == 20 and len(classes) == 5
    record(
        "9",
        ok,
        f"three-cross-zero patterns: {len(pats)} patterns fall into {len(classes)} relabeling classes (5 expected); "
        f"the case-7 ones canonicalize onto {onto}",
    )
    assert ok


# ---------------------------------------------------------------------------
# 10. alignment depth


def test_criterion_10_alignment_depth(record):
    ctx = make_ctx(3, 3)
    with Timer() as t:
        certs = covered = 0
        bad = []
        for hb in range(ctx.q):
            A, B = _odd_passing(ctx, hb)
            if not len(A) or not len(B):
                continue
            # each destination's chain test depends on hbar and its own hbar_kk
            for tup in _covering(A, B):
                cert = ic3.check_alignment_depth(ic3.ICNormalization.of(ctx, *tup, hb))
                certs += 1
                if not (cert["pass"] and cert["D"] == 4):
                    bad.append((hb, tup))
            covered += len(A) * len(B) ** 2
        spot = {}
        for n in (3, 5, 7):
            c = make_ctx(3, n)
            rng = np.random.default_rng(n)
            while True:
                tup = rng.integers(0, c.q, size=4).tolist()
                norm = ic3.ICNormalization.of(c, *tup)
                if all(x["pass"] for x in ic3.odd_conditions(norm)):
                    break
            cert = ic3.check_alignment_depth(norm)
            spot[n] = cert["D"] == 2 * n - n // 2 - 1 == ic3.depth_bound(n) and cert["pass"]
    ok = not bad and covered == 139968 and all(spot.values()) and t.elapsed < 60
    record("10", ok, f"{certs} certificates covering {covered} passing tuples, D=4, formula spot checks {spot}, {t.elapsed:.1f}s")
    assert ok


# ---------------------------------------------------------------------------
# 11. determinism

ODD_GF27 = '{"p":3,"n":3,"matrix":[[3,1,1],[1,3,1],[1,12,3]]}'
P2_GF49 = '{"p":7,"n":2,"matrix":[[15,42,21],[14,40,13],[20,31,27]]}'


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "ffalign", *args], capture_output=True, check=True).stdout


def test_criterion_11_determinism(record, tmp_path):
    runs = [
        ("census", "x", "--p", "3", "--n", "3", "--exhaustive"),
        ("census", "x", "--p", "3", "--n", "2", "--target", "x_full", "--sample", "5000", "--seed", "1", "--format", "csv"),
        ("census", "ic3", "--p", "5", "--n", "3", "--sample", "10000", "--seed", "7"),
        ("census", "ic3", "--p", "7", "--n", "2", "--exhaustive", "--workers", "2", "--format", "csv"),
        ("ic3", "construct", "--json", ODD_GF27),
        ("ic3", "construct", "--json", P2_GF49),
        ("xch", "construct", "--json", '{"p":3,"n":4,"matrix":[[2,7],[5,1]]}'),
        ("xch", "simulate", "--json", '{"p":3,"n":3,"matrix":[[1,1],[5,1]]}', "--messages", "random:42"),
    ]
    same = 0
    for args in runs:
        same += _cli(*args) == _cli(*args)
    files = []
    for tag in ("a", "b"):
        _cli("census", "ic3", "--p", "5", "--n", "2", "--sample", "3000", "--seed", "3", "--out", str(tmp_path / tag))
    for ext in ("json", "csv"):
        files.append((tmp_path / f"a.{ext}").read_bytes() == (tmp_path / f"b.{ext}").read_bytes())
    ok = same == len(runs) and all(files)
    record("11", ok, f"{same}/{len(runs)} stdout pairs and {sum(files)}/2 report files byte-identical")
    assert ok


# ---------------------------------------------------------------------------
# limits replaced by monotone trends over p


def test_trends_over_p(record):
    ps = (3, 5, 7, 11)
    x2 = [run_census(CensusSpec(p, 2, "x_normalized_h")).fractions["degenerate"] for p in ps]
    x3 = [run_census(CensusSpec(p, 3, "x_normalized_h")).fractions["degenerate"] for p in ps]
    eig = [census.eigen_fraction(p, 2) for p in (5, 7, 11)]
    odd, quad = [], []
    for p in ps:
        r3 = run_census(CensusSpec(p, 3, "ic_normalized", threshold=1 << 22))
        odd.append(Fraction(r3.conditions["odd_powers"], r3.total))
        r2 = run_census(CensusSpec(p, 2, "ic_normalized"))
        quad.append(Fraction(r2.conditions["p2"], r2.total))
    dec = lambda xs: all(a > b for a, b in zip(xs, xs[1:]))
    inc = lambda xs: all(a < b for a, b in zip(xs, xs[1:]))
    ok = dec(x2) and dec(x3) and dec(eig) and inc(odd) and inc(quad)
    record(
        "trends",
        ok,
        f"X degenerate falls (n=2,3), eigen fraction falls over p=5,7,11, odd-n and n=2 condition fractions rise: "
        f"odd {[round(float(x), 4) for x in odd]}, n=2 {[round(float(x), 4) for x in quad]}",
    )
    assert ok
