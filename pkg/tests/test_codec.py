import random
from fractions import Fraction

import pytest
from gmpy2 import mpq

from geopack import codec
from geopack.errors import (DegenerateFamilyError, DegeneratePencilError, NoCommonSlopeError, ParallelError,
                            PerpendicularError)
from geopack.scalar import EXACT, PrecisionContext, QuadSurd, parse_scalar

WORKED = (1, 2, 3, -1, -2, -3)


def cramer(l1, l2):
    """Solve a1 x + b1 y = c1, a2 x + b2 y = c2 exactly."""
    (a1, b1, c1), (a2, b2, c2) = l1, l2
    det = a1 * b2 - a2 * b1
    return Fraction(c1 * b2 - c2 * b1, 1) / det, Fraction(a1 * c2 - a2 * c1, 1) / det


def brute_ratio(ms, s, t):
    """Signed ratio of x-intercepts of lines y = m x (through the origin) with y = s x + t."""
    xs = [cramer((m, -1, 0), (s, -1, -t))[0] for m in ms]
    return (xs[0] - xs[1]) / (xs[1] - xs[2])


def rand_rat(rng, span=1000, den=100):
    return Fraction(rng.randint(-span, span), rng.randint(1, den))


@pytest.mark.parametrize("seed", range(200))
def test_transversal_ratio_matches_brute_force(seed):
    rng = random.Random(seed)
    ms = set()
    while len(ms) < 3:
        ms.add(rand_rat(rng))
    ms = list(ms)
    s = rand_rat(rng)
    t = rand_rat(rng) or Fraction(1)
    if s in ms:
        return
    got = codec.transversal_ratio(*[mpq(v) for v in ms], mpq(s))
    assert Fraction(int(got.numerator), int(got.denominator)) == brute_ratio(ms, s, t)


def test_worked_example_hand_values():
    enc = codec.encode6(WORKED)
    lit = enc.literal
    assert (lit.b1, lit.b2, lit.r, enc.s) == (-1, -2, 3, 0)
    assert lit.B(EXACT) == (0, 2) and lit.P0(EXACT) == (0, 1)
    assert codec.decode6_strict(enc) == WORKED


def test_common_slope_hand_surd():
    # (4-s)/(2(1-s)) = (8+2s)/(1+s)  <=>  s^2 + 5s - 4 = 0
    s = codec.solve_common_slope((1, 2, 4), (-1, -3, -4))
    assert s == QuadSurd(mpq(-5, 2), mpq(1, 2), 41)
    assert codec.transversal_ratio(1, 2, 4, s) == codec.transversal_ratio(-1, -3, -4, s)


def test_parallel_pencils_have_no_common_slope():
    # (3-s)/(1-s) = (6-s)/(4-s) reduces to 12 = 6
    with pytest.raises(NoCommonSlopeError):
        codec.solve_common_slope((1, 2, 3), (4, 5, 6))


def test_identical_pencils_are_a_degenerate_family():
    with pytest.raises(DegenerateFamilyError):
        codec.encode6((1, 2, 3, 1, 2, 3))


def test_repeated_slope_rejected():
    with pytest.raises(DegeneratePencilError):
        codec.encode6((1, 1, 3, -1, -2, -3))


def test_ratio_parallel_transversal():
    with pytest.raises(ParallelError):
        codec.transversal_ratio(1, 2, 3, 2)


@pytest.mark.parametrize("seed", range(100))
def test_common_slope_and_concurrency_exact(seed):
    six = codec.random_six(random.Random(seed))
    try:
        s = codec.solve_common_slope(six[:3], six[3:])
    except NoCommonSlopeError:
        return
    assert codec.transversal_ratio(*six[:3], s) - codec.transversal_ratio(*six[3:], s) == 0
    fig = codec.build_figure(six, s)
    assert fig.concurrency_residual() == 0
    rat = codec.rationalize(fig)
    assert rat.slopes() == tuple(six)
    assert isinstance(rat.B["xy".index(rat.b_axis)], type(mpq()))


@pytest.mark.parametrize("seed", range(20))
def test_ratio_is_strictly_monotone_between_poles(seed):
    rng = random.Random(seed)
    m1, m2, m3 = sorted({rand_rat(rng) for _ in range(3)})
    if len({m1, m2, m3}) < 3:
        return
    width = m3 - m1
    intervals = [(m1 - 10 * width, m1), (m1, m3), (m3, m3 + 10 * width)]
    for lo, hi in intervals:
        ss = [lo + (hi - lo) * Fraction(k, 202) for k in range(1, 202)]
        vals = [codec.transversal_ratio(m1, m2, m3, s) for s in ss if s != m2]
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        assert all(d > 0 for d in diffs) or all(d < 0 for d in diffs)


@pytest.mark.parametrize("seed", range(100))
def test_strict_roundtrip_exact(seed):
    six = codec.random_six(random.Random(seed))
    try:
        enc = codec.encode6(six)
    except NoCommonSlopeError:
        return
    assert codec.decode6_strict(enc) == tuple(six)


def test_strict_roundtrip_precision_256():
    ctx = PrecisionContext.precision(256)
    worst = 0
    for seed in range(100):
        six = codec.random_six(random.Random(seed))
        try:
            enc = codec.encode6(six, ctx=ctx)
        except NoCommonSlopeError:
            continue
        out = codec.decode6_strict(enc, ctx)
        for x, y in zip(six, out):
            x = ctx.num(x)
            worst = max(worst, abs(x - y) / max(1, abs(x)))
    assert worst <= ctx.mp.ldexp(1, -192)


def test_encoded_record_roundtrip():
    enc = codec.encode6((1, 2, 4, -1, -3, -4))
    back = codec.EncodedSixStrict.from_record(enc.to_record())
    assert back == enc


def test_worked_example_hypothesis_sweep():
    hyps = [mpq(k, 10) for k in range(-5, 6)]
    rows = codec.hypothesis_sweep(WORKED, hyps)
    by = {r["s_hypothesis"]: r for r in rows}
    assert by[mpq(-1, 2)]["error"] == "PerpendicularError"
    good = [r for r in rows if r["error"] is None]
    assert len(good) == 10
    assert all(r["agrees"] for r in good)
    assert sum(r["distinct"] for r in good) == 9


def test_literal_decode_checks_consistency():
    enc = codec.encode6(WORKED)
    assert codec.decode6_literal(enc.literal, 0) == WORKED
    # the -1/2 hypothesis makes 1 - s*b2 vanish for b2 = -2
    with pytest.raises(PerpendicularError):
        codec.decode6_literal(enc.literal, mpq(-1, 2))


def test_collision_search_bookkeeping_and_determinism():
    one = codec.collision_search(1, 1, 10**6)
    assert one["attempted"] == 1
    a = codec.collision_search(7, 15)
    b = codec.collision_search(7, 15)
    assert a == b
    assert a["attempted"] == a["degenerate"] + a["identical"] + a["mismatch"] + a["collisions"]
    assert a["literal_injectivity"] == ("refuted" if a["collisions"] else "unrefuted")


def test_collisions_are_exact():
    rep = codec.collision_search(1, 20)
    assert rep["exact_collisions"] is True
    for ex in rep["exemplars"]:
        x = [mpq(v) for v in ex["x"]]
        enc_x = codec.encode6(x)
        y = [parse_scalar(v) for v in ex["y"]]
        enc_y = codec.encode6(y)
        assert x != y
        assert enc_x.literal == enc_y.literal
