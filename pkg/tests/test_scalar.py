import math
import random
from fractions import Fraction

import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from geopack import scalar
from geopack.errors import FieldMismatchError, NotInFieldError
from geopack.scalar import (EXACT, PrecisionContext, QuadSurd, compare_with_tol, exact_sqrt, format_scalar,
                            parse_scalar, to_rational_approx)

rationals = st.fractions(max_denominator=10**6).filter(lambda f: abs(f) < 10**9)


def brute_best(x, max_den):
    """Enumerate every denominator; ties: smaller denominator, then even numerator."""
    best = None
    for q in range(1, max_den + 1):
        base = math.floor(x * q)
        for p in (base, base + 1):
            cand = Fraction(p, q)
            key = (abs(cand - x), q, p % 2)
            if best is None or key < best[0]:
                best = (key, cand)
    return best[1]


def _mpq_mp(q):
    q = mpq(q)
    return mpmath.mpf(int(q.numerator)) / int(q.denominator)


def surd_mp(v, prec=600):
    with mpmath.workprec(prec):
        if isinstance(v, QuadSurd):
            return _mpq_mp(v.a) + _mpq_mp(v.b) * mpmath.sqrt(int(v.d))
        return _mpq_mp(v)


def test_rat_exact_conversions():
    assert scalar.rat(0.1) == mpq(3602879701896397, 36028797018963968)
    assert scalar.rat(Fraction(3, 7)) == mpq(3, 7)
    assert scalar.rat("22/7") == mpq(22, 7)
    with pytest.raises(ValueError):
        scalar.rat(float("nan"))


def test_rat_from_private_mpf():
    ctx = PrecisionContext.precision(128)
    assert scalar.rat(ctx.num(mpq(3, 8))) == mpq(3, 8)


@pytest.mark.parametrize("x", [mpq(1, 3), mpq(-7, 5), mpq(355, 113)])
def test_rational_input_with_small_denominator_is_returned(x):
    assert to_rational_approx(x, 1000) == x


@pytest.mark.parametrize("seed", range(40))
def test_best_approximation_matches_enumeration(seed):
    rng = random.Random(seed)
    x = Fraction(rng.randint(-10**6, 10**6), rng.randint(1, 10**6))
    n = rng.randint(1, 60)
    assert to_rational_approx(mpq(x), n) == brute_best(x, n)


def test_best_approximation_of_surd_matches_enumeration():
    s2 = QuadSurd(0, 1, 2)
    # enumeration runs on a 150-digit rational stand-in for sqrt(2)
    x = Fraction(math.isqrt(2 * 10**300), 10**150)
    for n in (1, 2, 5, 12, 29, 70, 100):
        assert to_rational_approx(s2, n) == brute_best(x, n)


def test_tie_rule_prefers_smaller_denominator():
    # 1/2 is equidistant from 0/1 and 1/1 when max_den = 1
    assert to_rational_approx(mpq(1, 2), 1) == 0
    assert to_rational_approx(mpq(3, 2), 1) == 2


def test_exact_sqrt_rational_and_field():
    assert exact_sqrt(mpq(9, 4)) == mpq(3, 2)
    r = exact_sqrt(mpq(8))
    assert isinstance(r, QuadSurd) and r.d == 2 and r.b == 2
    assert exact_sqrt(mpq(18), field=2) == QuadSurd(0, 3, 2)
    assert r * r == 8


def test_surd_sqrt_inside_and_outside_field():
    x = QuadSurd(3, 2, 2)  # (1 + sqrt2)^2
    assert x.sqrt() == QuadSurd(1, 1, 2)
    with pytest.raises(NotInFieldError):
        QuadSurd(1, 1, 2).sqrt()


def test_field_mismatch():
    with pytest.raises(FieldMismatchError):
        QuadSurd(0, 1, 2) + QuadSurd(0, 1, 3)


@settings(max_examples=200, deadline=None)
@given(rationals, rationals, rationals, rationals, st.sampled_from([2, 3, 5, 41]))
def test_surd_arithmetic_matches_high_precision(a, b, c, d, f):
    x = QuadSurd.make(a, b, f)
    y = QuadSurd.make(c, d, f)
    with mpmath.workprec(600):
        mx, my = surd_mp(x), surd_mp(y)
        tol = mpmath.mpf(2) ** -500 * (1 + abs(mx) + abs(my)) ** 2
        assert abs(surd_mp(x + y) - (mx + my)) <= tol
        assert abs(surd_mp(x * y) - mx * my) <= tol
        assert abs(surd_mp(x - y) - (mx - my)) <= tol
        if y != 0:
            assert abs(surd_mp(x / y) - mx / my) <= tol * (1 + abs(1 / my)) ** 2
        assert (x < y) == (mx < my) or abs(mx - my) <= tol


@settings(max_examples=200, deadline=None)
@given(rationals, rationals.filter(lambda v: v != 0), st.sampled_from([2, 3, 7, 10]))
def test_surd_floor_matches_high_precision(a, b, d):
    x = QuadSurd(a, b, d)
    assert math.floor(x) == int(mpmath.floor(surd_mp(x)))


def test_precision_context_parse_and_tolerance():
    ctx = PrecisionContext.parse("p=128")
    assert ctx.bits == 128 and ctx.eq_tolerance == mpq(1, 2**64)
    assert PrecisionContext.parse("exact").is_exact
    with pytest.raises(ValueError):
        PrecisionContext.parse("fast")
    with pytest.raises(ValueError):
        PrecisionContext.precision(32)


def test_contexts_do_not_share_precision():
    a, b = PrecisionContext.precision(100), PrecisionContext.precision(400)
    assert a.num(mpq(1, 3)).context.prec == 100
    assert b.num(mpq(1, 3)).context.prec == 400
    assert mpmath.mp.prec == 53


def test_compare_with_tol():
    ctx = PrecisionContext.precision(128)
    assert compare_with_tol(1, 1 + mpq(1, 2**80), ctx) == 0
    assert compare_with_tol(1, 1 + mpq(1, 2**40), ctx) == -1
    assert compare_with_tol(mpq(1, 3), mpq(1, 3) + mpq(1, 10**40), EXACT) == -1


@settings(max_examples=100, deadline=None)
@given(rationals, rationals, st.sampled_from([2, 5, 13]))
def test_format_parse_roundtrip_exact(a, b, d):
    x = QuadSurd.make(a, b, d)
    assert parse_scalar(format_scalar(x)) == x


def test_format_parse_roundtrip_precision():
    ctx = PrecisionContext.precision(256)
    x = ctx.mp.sqrt(ctx.num(2))
    assert parse_scalar(format_scalar(x), ctx) == x


def test_scalar_bits():
    assert scalar.scalar_bits(mpq(5, 3)) == 3 + 2
    assert scalar.scalar_bits(PrecisionContext.precision(200).num(1)) == 200
