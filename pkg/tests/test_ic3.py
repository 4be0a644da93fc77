import itertools
import json
from fractions import Fraction

import numpy as np
import pytest

from ffalign import ic3
from ffalign.errors import ConditionsNotMet, VerificationFailed, ZeroCoefficient
from ffalign.gf import make_ctx

ALL_LINKS = [(j, i) for j in (1, 2, 3) for i in (1, 2, 3)]


def brute_independent(elems):
    """No nonzero F_p combination of the elements vanishes."""
    ctx = elems[0].ctx
    for coefs in itertools.product(range(ctx.p), repeat=len(elems)):
        if any(coefs):
            acc = ctx.zero
            for c, e in zip(coefs, elems):
                acc = acc + e * c
            if not acc:
                return False
    return True


def norm_of(ctx, *t):
    return ic3.ICNormalization.of(ctx, *t)


def roundtrip(scheme, ch, blocks=4, seed=0):
    rng = np.random.default_rng(seed)
    msgs = [rng.integers(0, ch.ctx.p, size=(blocks, d)) for d in scheme.streams]
    out = ic3.simulate_ic(scheme, ch, msgs)
    return all(np.array_equal(a, b) for a, b in zip(msgs, out))


def random_channel(ctx, rng):
    return ic3.IC3Channel.from_matrix(ctx, rng.integers(1, ctx.q, size=(3, 3)).tolist())


@pytest.mark.parametrize("p,n", [(3, 3), (5, 2), (2, 3)])
def test_normalization_reaches_four_parameter_form(p, n):
    ctx = make_ctx(p, n)
    rng = np.random.default_rng(p + n)
    for _ in range(40):
        ch = random_channel(ctx, rng)
        norm = ic3.normalize_ic(ch)
        g = norm.normalized_gains(ch)
        target = ic3.normalized_channel(ctx, *norm.labels().values())
        assert [[x.label for x in r] for r in g] == target.gains


def test_normalize_rejects_zero():
    ctx = make_ctx(3, 3)
    with pytest.raises(ZeroCoefficient):
        ic3.normalize_ic(ic3.IC3Channel.from_matrix(ctx, [[1, 0, 1], [1, 1, 1], [1, 1, 1]]))


def test_eigen_condition_against_definition():
    ctx = make_ctx(5, 2)
    rng = np.random.default_rng(0)
    for t in rng.integers(0, ctx.q, size=(400, 4)).tolist():
        rep = ic3.classify_normalized(norm_of(ctx, *t))
        # hbar = 0 counts as an F_p value, as in the closed-form fraction
        expect = t[3] < 5 and all(x >= 5 for x in t[:3])
        assert (rep["class"] == "EigenCase") == expect


@pytest.mark.parametrize("p,n", [(2, 3), (3, 3), (2, 5)])
def test_odd_conditions_against_brute_force(p, n):
    ctx = make_ctx(p, n)
    rng = np.random.default_rng(1)
    for t in rng.integers(0, ctx.q, size=(150, 4)).tolist():
        norm = norm_of(ctx, *t)
        elems = ic3.odd_condition_elements(norm)
        conds = {c["name"]: c["pass"] for c in ic3.odd_conditions(norm)}
        for name, es in elems.items():
            assert conds[name] == brute_independent(es), (t, name)


@pytest.mark.parametrize("p,n", [(3, 2), (2, 3), (3, 3), (5, 2)])
def test_predicate_table_matches_pointwise_conditions(p, n):
    ctx = make_ctx(p, n)
    rng = np.random.default_rng(2)
    for hb in rng.integers(0, ctx.q, size=4).tolist():
        t = ic3.predicate_table(ctx, hb)
        for x in range(ctx.q):
            norm = norm_of(ctx, x, x, x, hb)
            if n % 2:
                c = {d["name"]: d["pass"] for d in ic3.odd_conditions(norm)}
                assert t["odd_A"][x] == c["hbar11_not_in_A"]
                assert t["odd_B"][x] == c["hbar22_not_in_B"]
            if n == 2 and hb:
                c = [d["pass"] for d in ic3.p2_conditions(norm)]
                assert t["p2_11"][x] == (c[0] and c[1])
                assert t["p2_kk"][x] == (c[2] and c[3])


def test_class_precedence():
    assert ic3.decide(3, True, True, False) == "EigenCase"
    assert ic3.decide(3, False, True, False) == "OddPowersCase"
    assert ic3.decide(2, False, False, True) == "P2Case"
    assert ic3.decide(2, False, False, False) == "Unclassified"
    assert ic3.odd_rate(3) == Fraction(4, 3) and ic3.odd_rate(5) == Fraction(7, 5)


@pytest.mark.parametrize("p,n", [(3, 3), (5, 2), (7, 2), (3, 2), (2, 2), (5, 3), (2, 3), (3, 4)])
def test_random_raw_channels_construct_and_decode(p, n):
    ctx = make_ctx(p, n)
    rng = np.random.default_rng(10 * p + n)
    seen = set()
    for _ in range(12):
        ch = random_channel(ctx, rng)
        s = ic3.construct_ic(ch)
        rep = ic3.verify_ic(s, ch)
        assert rep["pass"]
        assert s.sum_rate == ic3.class_rate(ic3.classify_ic(ch)["class"], n) or s.mode == "degenerate_rate1"
        assert roundtrip(s, ch)
        seen.add(s.mode)
    assert seen


def test_odd_powers_scheme_gf27():
    ctx = make_ctx(3, 3)
    norm = norm_of(ctx, 3, 3, 3, 12)
    assert ic3.classify_normalized(norm)["class"] == "OddPowersCase"
    s = ic3.construct_odd(norm)
    assert s.mode == "odd_powers" and s.sum_rate == Fraction(4, 3)
    assert s.certificates["rank_S1"] == s.certificates["rank_S2"] == s.certificates["rank_S3"] == 3
    with pytest.raises(ConditionsNotMet):
        ic3.construct_eigen(norm)


def test_p2_scheme_structure():
    ctx = make_ctx(5, 2)
    rng = np.random.default_rng(5)
    while True:
        t = rng.integers(1, ctx.q, size=4).tolist()
        norm = norm_of(ctx, *t)
        if all(c["pass"] for c in ic3.p2_conditions(norm)):
            break
    s = ic3.construct_p2(norm)
    assert s.m == 5 and s.streams == [4, 4, 4] and s.sum_rate == Fraction(6, 5)
    assert all(s.certificates[f"rank_S{k}"] == 10 for k in (1, 2, 3))
    ch = ic3.normalized_channel(ctx, *t)
    assert roundtrip(s, ch)


def test_zero_case_counts():
    counts = {}
    structures = {}
    for mask in range(1, 512):
        zeros = {ALL_LINKS[k] for k in range(9) if mask >> k & 1}
        case = ic3.zero_case(zeros)["case"]
        counts[case] = counts.get(case, 0) + 1
        if case == 7:
            s, sigma = ic3.canonicalize(zeros)
            assert ic3.relabel_zeros(zeros, sigma) == s.zeros
            structures[s.name] = structures.get(s.name, 0) + 1
    assert counts == {1: 64, 2: 192, 3: 192, 4: 1, 5: 21, 6: 15, 7: 26}
    assert structures == {"D": 6, "E": 2, "G": 3, "H": 2, "I": 4, "J": 3, "K": 6}


def test_three_cross_zero_patterns_form_four_orbits():
    # orbits under simultaneous relabeling of sources and destinations
    cross = [z for z in ALL_LINKS if z[0] != z[1]]
    pats = [frozenset(c) for c in itertools.combinations(cross, 3)]
    assert len(pats) == 20
    orbits = {min(tuple(sorted(ic3.relabel_zeros(z, s))) for s in ic3.PERMUTATIONS) for z in pats}
    assert len(orbits) == 4
    cases = [ic3.zero_case(z)["case"] for z in pats]
    assert cases.count(6) == 12 and cases.count(7) == 8
    assert {ic3.canonicalize(z)[0].name for z in pats if ic3.zero_case(z)["case"] == 7} == {"D", "E"}


@pytest.mark.parametrize("mask", [m for m in range(1, 512) if m % 7 == 0 or m in (0b111111111, 0b100010001)])
def test_zero_pattern_schemes(mask):
    ctx = make_ctx(5, 2)
    rng = np.random.default_rng(mask)
    g = rng.integers(1, ctx.q, size=9)
    for k in range(9):
        if mask >> k & 1:
            g[k] = 0
    ch = ic3.IC3Channel.from_matrix(ctx, g.reshape(3, 3).tolist())
    rep = ic3.classify_ic(ch)
    s = ic3.construct_ic(ch)
    assert ic3.verify_ic(s, ch)["pass"]
    assert str(s.sum_rate) == rep["C_linear"]
    assert roundtrip(s, ch)


def test_relabel_permutes_links():
    ctx = make_ctx(5, 2)
    ch = ic3.IC3Channel.from_matrix(ctx, [[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    r = ch.relabel((1, 2, 0))
    for j, i in itertools.product(range(3), repeat=2):
        assert r.h[(j + 1) % 3][(i + 1) % 3] == ch.h[j][i]


def test_depth_bound_and_certificate():
    assert [ic3.depth_bound(n) for n in (3, 5, 7)] == [4, 7, 10]
    ctx = make_ctx(3, 3)
    cert = ic3.check_alignment_depth(norm_of(ctx, 3, 3, 3, 12))
    assert cert["pass"] and cert["D"] == 4 and cert["tuples_checked"] > 0
    with pytest.raises(ConditionsNotMet):
        ic3.check_alignment_depth(norm_of(ctx, 1, 3, 3, 12))


def test_scheme_json_round_trip_and_tamper():
    ctx = make_ctx(3, 3)
    norm = norm_of(ctx, 3, 3, 3, 12)
    s = ic3.construct_odd(norm)
    text = json.dumps(s.to_json(), sort_keys=True)
    back = ic3.ICScheme.from_json(json.loads(text))
    ch = ic3.normalized_channel(ctx, 3, 3, 3, 12)
    assert ic3.verify_ic(back, ch)["pass"]
    back.precoders[1] = np.full_like(back.precoders[1], 5)
    with pytest.raises(VerificationFailed):
        ic3.verify_ic(back, ch)
