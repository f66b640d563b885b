"""Six slopes stored as five reals plus two rationals.

Two pencils of three lines (apex A at the origin, apex B elsewhere) are laid
over one shared transversal L whose slope makes the two intercept ratios
equal.  The figure is then scaled about the origin until one coordinate of B
is rational, and a point of L with a rational coordinate is kept.

The stored tuple is (b1, b2, r, B, P0): tangents of the angles from L to the
4th and 5th lines, the signed intercept ratio on L, the apex B and a point of
L, each point with one rational coordinate.  :func:`decode6_strict` also gets
the transversal slope and is an exact inverse; :func:`decode6_literal` must
be told which slope to assume.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from gmpy2 import mpq

from . import scalar
from .errors import (
    ApexAtInfinityError,
    CodecError,
    CoincidentApexError,
    DegenerateAngleError,
    DegenerateFamilyError,
    DegenerateFigureError,
    DegeneratePencilError,
    NoCommonSlopeError,
    ParallelError,
    PerpendicularError,
)
from .scalar import DEFAULT_MAX_DEN, EXACT, PrecisionContext, Rat, to_rational_approx


def tan_between(t, m, ctx: PrecisionContext = EXACT):
    """Signed tangent of the angle turning a line of slope ``t`` onto slope ``m``."""
    t, m = ctx.num(t), ctx.num(m)
    den = 1 + t * m
    if ctx.is_zero(den):
        raise PerpendicularError(f"slopes {t} and {m} are perpendicular")
    return (m - t) / den


def _check_pencil(ms, ctx):
    m1, m2, m3 = ms
    if ctx.eq(m1, m2) or ctx.eq(m2, m3) or ctx.eq(m1, m3):
        raise DegeneratePencilError(f"repeated slope in pencil {ms}")


def transversal_ratio(m1, m2, m3, s, ctx: PrecisionContext = EXACT):
    """Signed ratio (xa - xb)/(xb - xc) cut by a transversal of slope ``s``
    on the pencil of slopes ``m1, m2, m3``.

    >>> transversal_ratio(1, 2, 3, 0)
    mpq(3,1)
    """
    m1, m2, m3, s = (ctx.num(v) for v in (m1, m2, m3, s))
    _check_pencil((m1, m2, m3), ctx)
    for m in (m1, m2, m3):
        if ctx.eq(s, m):
            raise ParallelError(f"transversal slope {s} equals pencil slope {m}")
    return ((m2 - m1) * (m3 - s)) / ((m3 - m2) * (m1 - s))


def common_slope_quadratic(m123, m456, ctx: PrecisionContext = EXACT):
    """Coefficients (A, B, C) of A*s^2 + B*s + C = 0, the condition that both
    pencils cut the same signed ratio on a transversal of slope s."""
    m1, m2, m3 = (ctx.num(v) for v in m123)
    m4, m5, m6 = (ctx.num(v) for v in m456)
    p = (m2 - m1) * (m6 - m5)
    q = (m5 - m4) * (m3 - m2)
    a = p - q
    b = q * (m6 + m1) - p * (m3 + m4)
    c = p * m3 * m4 - q * m6 * m1
    return a, b, c


def _bisect_root(f, guess, ctx):
    mp = ctx.mp
    width = max(mp.one, abs(guess)) * mp.ldexp(1, -16)
    lo, hi = guess - width, guess + width
    for _ in range(256):
        if f(lo) * f(hi) <= 0:
            break
        width *= 2
        lo, hi = guess - width, guess + width
    else:
        return guess
    flo = f(lo)
    for _ in range(ctx.bits + 64):
        mid = (lo + hi) / 2
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return (lo + hi) / 2


def _quadratic_roots(a, b, c, ctx):
    """Real roots of a*s^2 + b*s + c, or raise NoCommonSlopeError."""
    if ctx.is_exact:
        if a == 0:
            if b == 0:
                raise NoCommonSlopeError("equation reduces to a nonzero constant")
            return [-c / b]
        disc = b * b - 4 * a * c
        if disc < 0:
            raise NoCommonSlopeError("no real common slope (negative discriminant)")
        root = ctx.sqrt(disc, field=scalar.field_of(a, b, c))
        return [(-b + root) / (2 * a), (-b - root) / (2 * a)]

    mp = ctx.mp
    if abs(a) < mp.ldexp(abs(c), 32 - ctx.bits) or a == 0:
        # near-linear: the second root runs off to infinity
        if b == 0:
            raise NoCommonSlopeError("equation reduces to a nonzero constant")
        return [_bisect_root(lambda s: (a * s + b) * s + c, -c / b, ctx)]
    disc = b * b - 4 * a * c
    if disc < 0:
        if not ctx.is_zero(disc / (b * b if b else 1)):
            raise NoCommonSlopeError("no real common slope (negative discriminant)")
        disc = mp.zero
    root = mp.sqrt(disc)
    q = -(b + root) / 2 if b >= 0 else -(b - root) / 2
    if q == 0:
        return [mp.zero]
    return [q / a, c / q]


def solve_common_slope(m123, m456, ctx: PrecisionContext = EXACT):
    """Transversal slope at which both pencils cut equal signed ratios.

    When two roots qualify the one with smaller absolute value wins
    (ties: the smaller root).
    """
    m123 = tuple(ctx.num(v) for v in m123)
    m456 = tuple(ctx.num(v) for v in m456)
    _check_pencil(m123, ctx)
    _check_pencil(m456, ctx)
    a, b, c = common_slope_quadratic(m123, m456, ctx)
    if ctx.is_exact:
        identity = a == 0 and b == 0 and c == 0
    else:
        m1, m2, m3 = m123
        m4, m5, m6 = m456
        p, q = abs((m2 - m1) * (m6 - m5)), abs((m5 - m4) * (m3 - m2))
        scales = (p + q, q * abs(m6 + m1) + p * abs(m3 + m4), p * abs(m3 * m4) + q * abs(m6 * m1))
        identity = all(abs(v) <= ctx.mp.ldexp(sc, 0) * ctx.num(ctx.eq_tolerance) for v, sc in zip((a, b, c), scales))
    if identity:
        raise DegenerateFamilyError("both pencils induce the same ratio for every slope")
    slopes = m123 + m456
    roots = [r for r in _quadratic_roots(a, b, c, ctx) if not any(ctx.eq(r, m) for m in slopes)]
    if not roots:
        raise NoCommonSlopeError("every real root coincides with a pencil slope")
    return min(roots, key=lambda r: (abs(r), r))


# -- figure -----------------------------------------------------------------

def _meet(p, m, q, n, ctx, guard_exact=False):
    """Intersection of the line through p with slope m and through q with slope n."""
    den = m - n
    if (den == 0) if guard_exact else ctx.is_zero(den):
        raise ApexAtInfinityError(f"parallel lines of slope {m}")
    x = (q[1] - p[1] + m * p[0] - n * q[0]) / den
    return (x, p[1] + m * (x - p[0]))


def _slope(p, q, ctx, guard_exact=False):
    dx = q[0] - p[0]
    if (dx == 0) if guard_exact else ctx.is_zero(dx):
        raise PerpendicularError("reconstructed line is vertical")
    return (q[1] - p[1]) / dx


@dataclass(frozen=True)
class Figure:
    """Two pencils sharing the transversal L (slope ``s`` through ``anchor``).

    ``a, b, c`` are the shared intercepts, ``B`` the second apex; the first
    apex sits at the origin.  ``b_axis``/``b_rat`` and ``p0_axis``/``p0_rat``
    are set by :func:`rationalize`.
    """

    s: object
    anchor: tuple
    a: tuple
    b: tuple
    c: tuple
    B: tuple
    six: tuple
    scale: object = 1
    b_axis: str | None = None
    b_rat: Rat | None = None
    p0_axis: str | None = None
    p0_rat: Rat | None = None

    def concurrency_residual(self):
        """How far the line through c with slope m6 misses B (vertical offset)."""
        m6 = self.six[5]
        return (self.B[1] - self.c[1]) - m6 * (self.B[0] - self.c[0])

    def slopes(self, ctx: PrecisionContext = EXACT):
        """Recompute the six slopes from the drawn points."""
        origin = (0, 0)
        return tuple(_slope(origin, p, ctx) for p in (self.a, self.b, self.c)) + tuple(
            _slope(self.B, p, ctx) for p in (self.a, self.b, self.c)
        )


def build_figure(six, s, ctx: PrecisionContext = EXACT) -> Figure:
    """Lay both pencils on the transversal of slope ``s`` through (0, 1)."""
    six = tuple(ctx.num(v) for v in six)
    s = ctx.num(s)
    if any(ctx.eq(s, m) for m in six):
        raise ParallelError("transversal slope equals a pencil slope")
    m1, m2, m3, m4, m5, m6 = six
    anchor = (ctx.num(0), ctx.num(1))
    a, b, c = (_meet((0, 0), m, anchor, s, ctx) for m in (m1, m2, m3))
    B = _meet(a, m4, b, m5, ctx)
    if ctx.is_zero(B[0]) and ctx.is_zero(B[1]):
        raise CoincidentApexError("second apex coincides with the origin")
    return Figure(s=s, anchor=anchor, a=a, b=b, c=c, B=B, six=six)


def _already_rational(v, max_den, ctx):
    if ctx.is_exact:
        return isinstance(v, Rat) and v.denominator <= max_den
    return scalar.rat(v).denominator <= max_den


def rationalize(fig: Figure, max_den: int = DEFAULT_MAX_DEN, ctx: PrecisionContext = EXACT) -> Figure:
    """Scale the figure about the origin so one coordinate of B is rational.

    A coordinate that is already a rational with denominator <= max_den is
    used as is (x first).  Otherwise the larger-magnitude coordinate v is
    replaced by its best approximation q and everything scales by q/v.
    The kept point of L is the scaled anchor, whose x coordinate stays 0.
    """
    B = fig.B
    axis, q, lam = None, None, ctx.num(1)
    for i, name in enumerate("xy"):
        if _already_rational(B[i], max_den, ctx):
            axis, q = name, scalar.rat(B[i])
            break
    if axis is None:
        order = (0, 1) if abs(B[0]) >= abs(B[1]) else (1, 0)
        for i in order:
            q = to_rational_approx(B[i], max_den)
            if q != 0:
                axis = "xy"[i]
                lam = ctx.num(q) / B[i]
                break
        else:
            raise DegenerateFigureError("apex too close to the origin to rationalize")

    def sc(p):
        return (p[0] * lam, p[1] * lam)

    i = "xy".index(axis)
    newB = list(sc(B))
    newB[i] = ctx.num(q)
    anchor = sc(fig.anchor)
    anchor = (ctx.num(0), anchor[1])
    return Figure(
        s=fig.s,
        anchor=anchor,
        a=sc(fig.a),
        b=sc(fig.b),
        c=sc(fig.c),
        B=tuple(newB),
        six=fig.six,
        scale=lam,
        b_axis=axis,
        b_rat=q,
        p0_axis="x",
        p0_rat=mpq(0),
    )


# -- stored tuples ----------------------------------------------------------

def _point(axis, rat_part, real_part, ctx):
    rv, xv = ctx.num(rat_part), ctx.num(real_part)
    return (rv, xv) if axis == "x" else (xv, rv)


@dataclass(frozen=True)
class EncodedSix:
    b1: object
    b2: object
    r: object
    B_rat: Rat
    B_real: object
    B_rat_axis: str
    P0_rat: Rat
    P0_real: object
    P0_rat_axis: str

    def B(self, ctx: PrecisionContext = EXACT):
        return _point(self.B_rat_axis, self.B_rat, self.B_real, ctx)

    def P0(self, ctx: PrecisionContext = EXACT):
        return _point(self.P0_rat_axis, self.P0_rat, self.P0_real, ctx)

    def reals(self):
        return (self.b1, self.b2, self.r, self.B_real, self.P0_real)

    def rationals(self):
        return (self.B_rat, self.P0_rat)

    def to_record(self) -> dict:
        f = scalar.format_scalar
        return {
            "b1": f(self.b1),
            "b2": f(self.b2),
            "r": f(self.r),
            "B_rat": scalar.format_rat(self.B_rat),
            "B_real": f(self.B_real),
            "B_rat_axis": self.B_rat_axis,
            "P0_rat": scalar.format_rat(self.P0_rat),
            "P0_real": f(self.P0_real),
            "P0_rat_axis": self.P0_rat_axis,
        }

    @classmethod
    def from_record(cls, rec: dict, ctx: PrecisionContext = EXACT):
        p = scalar.parse_scalar
        return cls(
            b1=p(rec["b1"], ctx),
            b2=p(rec["b2"], ctx),
            r=p(rec["r"], ctx),
            B_rat=scalar.rat(rec["B_rat"]),
            B_real=p(rec["B_real"], ctx),
            B_rat_axis=rec["B_rat_axis"],
            P0_rat=scalar.rat(rec["P0_rat"]),
            P0_real=p(rec["P0_real"], ctx),
            P0_rat_axis=rec["P0_rat_axis"],
        )


@dataclass(frozen=True)
class EncodedSixStrict:
    literal: EncodedSix
    s: object

    def reals(self):
        return self.literal.reals() + (self.s,)

    def rationals(self):
        return self.literal.rationals()

    def to_record(self) -> dict:
        rec = self.literal.to_record()
        rec["s"] = scalar.format_scalar(self.s)
        return rec

    @classmethod
    def from_record(cls, rec: dict, ctx: PrecisionContext = EXACT):
        return cls(EncodedSix.from_record(rec, ctx), scalar.parse_scalar(rec["s"], ctx))


def literal_agree(e1: EncodedSix, e2: EncodedSix, ctx: PrecisionContext = EXACT) -> bool:
    """Same axis flags, identical rationals, reals equal within tolerance."""
    if (e1.B_rat_axis, e1.P0_rat_axis) != (e2.B_rat_axis, e2.P0_rat_axis):
        return False
    if e1.rationals() != e2.rationals():
        return False
    return all(ctx.eq(x, y) for x, y in zip(e1.reals(), e2.reals()))


def six_agree(x, y, ctx: PrecisionContext = EXACT) -> bool:
    return all(ctx.eq(a, b) for a, b in zip(x, y))


# -- encode / decode --------------------------------------------------------

def encode6(six, max_den: int = DEFAULT_MAX_DEN, ctx: PrecisionContext = EXACT) -> EncodedSixStrict:
    six = tuple(ctx.num(v) for v in six)
    if len(six) != 6:
        raise ValueError("need exactly six slopes")
    s = solve_common_slope(six[:3], six[3:], ctx)
    fig = rationalize(build_figure(six, s, ctx), max_den, ctx)
    try:
        b1 = tan_between(s, six[3], ctx)
        b2 = tan_between(s, six[4], ctx)
    except PerpendicularError as exc:
        raise PerpendicularError(f"transversal of slope {s} is perpendicular to L4 or L5") from exc
    r = transversal_ratio(six[0], six[1], six[2], s, ctx)
    B_real = fig.B[1] if fig.b_axis == "x" else fig.B[0]
    lit = EncodedSix(
        b1=b1,
        b2=b2,
        r=r,
        B_rat=fig.b_rat,
        B_real=B_real,
        B_rat_axis=fig.b_axis,
        P0_rat=fig.p0_rat,
        P0_real=fig.anchor[1],
        P0_rat_axis=fig.p0_axis,
    )
    return EncodedSixStrict(lit, s)


def angle_from_ratio(b1, b2, r, ctx: PrecisionContext = EXACT):
    """Tangent of the angle from L to L6 implied by the two stored angles and
    the intercept ratio: cot6 = cot5 - (cot4 - cot5)/r."""
    b1, b2, r = ctx.num(b1), ctx.num(b2), ctx.num(r)
    if ctx.is_zero(b1) or ctx.is_zero(b2) or ctx.is_zero(r):
        raise DegenerateAngleError("zero angle or ratio")
    if ctx.eq(b1, b2):
        raise DegenerateAngleError("L4 and L5 coincide")
    cot6 = 1 / b2 - (1 / b1 - 1 / b2) / r
    if ctx.is_zero(cot6):
        raise DegenerateAngleError("L6 perpendicular to L")
    return 1 / cot6


def _decode(enc: EncodedSix, s, ctx):
    s = ctx.num(s)
    b1, b2, r = (ctx.num(v) for v in (enc.b1, enc.b2, enc.r))
    if ctx.is_zero(r):
        raise DegenerateFigureError("zero intercept ratio")
    B, P0 = enc.B(ctx), enc.P0(ctx)
    if ctx.is_zero((B[1] - P0[1]) - s * (B[0] - P0[0])):
        raise DegenerateFigureError("apex B lies on the transversal")
    # division guards reject exact zeros only: in precision mode a tiny but
    # nonzero denominator is a steep line, which the stored data can encode
    ms = []
    for b in (b1, b2):
        den = 1 - s * b
        if den == 0:
            raise PerpendicularError("reconstructed line is vertical")
        ms.append((s + b) / den)
    m4, m5 = ms
    try:
        d = _meet(P0, s, B, m4, ctx, guard_exact=True)
        e = _meet(P0, s, B, m5, ctx, guard_exact=True)
    except ApexAtInfinityError as exc:
        raise DegenerateFigureError("stored angle is zero") from exc
    f = (e[0] + (e[0] - d[0]) / r, e[1] + (e[1] - d[1]) / r)
    m6 = _slope(B, f, ctx, guard_exact=True)
    origin = (0, 0)
    m1, m2, m3 = (_slope(origin, p, ctx, guard_exact=True) for p in (d, e, f))
    return (m1, m2, m3, m4, m5, m6)


def decode6_strict(enc: EncodedSixStrict, ctx: PrecisionContext = EXACT):
    return _decode(enc.literal, enc.s, ctx)


def decode6_literal(enc: EncodedSix, s_hypothesis, ctx: PrecisionContext = EXACT):
    """Decode assuming the transversal had slope ``s_hypothesis``.

    The stored tuple does not pin the transversal direction; every
    hypothesis gives a figure consistent with b1, b2 and r.
    """
    six = _decode(enc, s_hypothesis, ctx)
    want = angle_from_ratio(enc.b1, enc.b2, enc.r, ctx)
    got = tan_between(s_hypothesis, six[5], ctx)
    if not ctx.eq(want, got):
        raise DegenerateFigureError("reconstructed L6 disagrees with the stored angles")
    return six


# -- collision experiment ---------------------------------------------------

def random_six(rng: random.Random, ctx: PrecisionContext = EXACT, span: int = 1000, max_den: int = 100):
    """Six random rational slopes, pairwise distinct inside each pencil."""

    def draw():
        return mpq(rng.randint(-span, span), rng.randint(1, max_den))

    while True:
        six = [draw() for _ in range(6)]
        if len(set(six[:3])) == 3 and len(set(six[3:])) == 3:
            return tuple(ctx.num(v) for v in six)


def _random_offset(rng):
    while True:
        q = mpq(rng.randint(-5, 5), rng.randint(1, 10))
        if q != 0:
            return q


def hypothesis_sweep(six, hypotheses, max_den: int = DEFAULT_MAX_DEN, ctx: PrecisionContext = EXACT):
    """Literal-decode ``six``'s encoding under each hypothesis and re-encode.

    Returns one row per hypothesis: the decoded six-tuple (or the error) and
    whether its re-encoding reproduces the stored literal tuple.
    """
    enc = encode6(six, max_den, ctx)
    rows = []
    for h in hypotheses:
        row = {"s_hypothesis": h, "decoded": None, "agrees": False, "distinct": False, "error": None}
        try:
            y = decode6_literal(enc.literal, h, ctx)
            row["decoded"] = y
            row["distinct"] = not six_agree(y, [ctx.num(v) for v in six], ctx)
            again = encode6(y, max_den, ctx)
            row["agrees"] = literal_agree(enc.literal, again.literal, ctx)
        except CodecError as exc:
            row["error"] = type(exc).__name__
        rows.append(row)
    return rows


def collision_search(seed: int, trials: int, max_den: int = DEFAULT_MAX_DEN, ctx: PrecisionContext = EXACT,
                     max_exemplars: int = 5) -> dict:
    """Hunt for distinct six-tuples that share one literal stored tuple.

    Trial ``i`` draws from ``random.Random(seed ^ i)``: a random six-tuple,
    a perturbed transversal hypothesis, a literal decode and a re-encode.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    counts = {"attempted": 0, "degenerate": 0, "identical": 0, "mismatch": 0, "collisions": 0}
    errors: dict[str, int] = {}
    exemplars = []
    for i in range(trials):
        counts["attempted"] += 1
        rng = random.Random(seed ^ i)
        x = random_six(rng, ctx)
        offset = _random_offset(rng)
        try:
            enc = encode6(x, max_den, ctx)
            h = enc.s + ctx.num(offset)
            y = decode6_literal(enc.literal, h, ctx)
            if six_agree(x, y, ctx):
                counts["identical"] += 1
                continue
            again = encode6(y, max_den, ctx)
        except CodecError as exc:
            counts["degenerate"] += 1
            errors[type(exc).__name__] = errors.get(type(exc).__name__, 0) + 1
            continue
        if literal_agree(enc.literal, again.literal, ctx):
            counts["collisions"] += 1
            if len(exemplars) < max_exemplars:
                exemplars.append({
                    "trial": i,
                    "x": [scalar.format_scalar(v) for v in x],
                    "y": [scalar.format_scalar(v) for v in y],
                    "s_x": scalar.format_scalar(enc.s),
                    "s_y": scalar.format_scalar(again.s),
                    "literal": enc.literal.to_record(),
                })
        else:
            counts["mismatch"] += 1
    return {
        "seed": seed,
        "trials": trials,
        "max_den": max_den,
        **ctx.header(),
        **counts,
        "degenerate_by_error": dict(sorted(errors.items())),
        "exact_collisions": ctx.is_exact and counts["collisions"] > 0,
        "literal_injectivity": "refuted" if counts["collisions"] else "unrefuted",
        "exemplars": exemplars,
    }
