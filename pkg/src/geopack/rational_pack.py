"""Digit packing of six rationals into two integers, and the 18 -> 17 bundle.

Six rationals a_i/b_i become ``k`` (the field width) and one integer ``D``
holding the twelve magnitudes as k-bit digits in the order
a1, b1, a2, b2, ..., a6, b6, followed by a 6-bit field with the numerator
signs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from gmpy2 import mpq, mpz

from . import codec, scalar
from .errors import CodecError, CorruptPackError, NoCommonSlopeError, PackError
from .scalar import DEFAULT_MAX_DEN, EXACT, PrecisionContext

SIGN_BITS = 6
GROUP = 18
TIE_RULES = "root:min|s|,then-min-s;approx:min-den,then-even-num;axis:rational-first-x,else-larger|coord|"


def field_width(values) -> int:
    """Smallest k >= 1 with 2**k >= 2*max(values), treating max as at least 1."""
    m = max([1, *values])
    if min(values, default=0) < 0:
        raise ValueError("field values must be nonnegative")
    return max(1, int(2 * m - 1).bit_length())


@dataclass(frozen=True)
class PackedPair:
    k: int
    D: int

    def to_record(self) -> dict:
        return {"k": str(self.k), "D": str(self.D)}

    @classmethod
    def from_record(cls, rec: dict):
        return cls(int(rec["k"]), int(rec["D"]))

    def bits(self) -> int:
        return int(self.k).bit_length() + int(self.D).bit_length()


def pack12(rats) -> PackedPair:
    rats = [scalar.rat(r) for r in rats]
    if len(rats) != 6:
        raise ValueError("need exactly six rationals")
    fields = []
    for r in rats:
        fields += [abs(int(r.numerator)), int(r.denominator)]
    k = field_width(fields)
    d0 = 0
    for v in fields:
        d0 = (d0 << k) | v
    signs = 0
    for i, r in enumerate(rats):
        if r < 0:
            signs |= 1 << i
    return PackedPair(k, (d0 << SIGN_BITS) | signs)


def unpack12(p: PackedPair):
    k, D = int(p.k), int(p.D)
    if k < 1 or D < 0:
        raise CorruptPackError(f"bad pair k={k}")
    if D >= 1 << (12 * k + SIGN_BITS):
        raise CorruptPackError("packed integer wider than 12 fields")
    signs = D & ((1 << SIGN_BITS) - 1)
    d0 = D >> SIGN_BITS
    mask = (1 << k) - 1
    fields = [(d0 >> (k * (11 - j))) & mask for j in range(12)]
    out = []
    for i in range(6):
        num, den = fields[2 * i], fields[2 * i + 1]
        if den == 0:
            raise CorruptPackError(f"zero denominator in field {2 * i + 1}")
        if num == 0 and signs >> i & 1:
            raise CorruptPackError(f"negative zero in field {2 * i}")
        out.append(mpq(-num if signs >> i & 1 else num, den))
    return tuple(out)


# -- bundles ----------------------------------------------------------------

@dataclass(frozen=True)
class Bundle:
    """Eighteen values stored as three codec tuples plus one packed pair.

    ``flags`` holds three characters per group: the B and P0 rational axes
    and ``n``/``r`` for natural or reversed order of the second pencil.
    ``raw`` bundles keep the 18 inputs verbatim (degenerate fallback).
    """

    mode: str
    reals: tuple
    pair: PackedPair | None
    flags: str = ""
    header: dict = field(default_factory=dict, compare=False)

    def stored_values(self):
        """The numbers this bundle contributes to the next level."""
        if self.mode == "raw":
            return list(self.reals)
        return list(self.reals) + [mpz(self.pair.k), mpz(self.pair.D)]

    @property
    def stored_count(self) -> int:
        return len(self.stored_values())

    def to_record(self) -> dict:
        return {
            "mode": self.mode,
            "reals": [scalar.format_scalar(v) for v in self.reals],
            "pair": None if self.pair is None else self.pair.to_record(),
            "flags": self.flags,
            "header": self.header,
        }

    @classmethod
    def from_record(cls, rec: dict, ctx: PrecisionContext = EXACT):
        pair = None if rec["pair"] is None else PackedPair.from_record(rec["pair"])
        reals = tuple(scalar.parse_scalar(v, ctx) for v in rec["reals"])
        return cls(rec["mode"], reals, pair, rec.get("flags", ""), rec.get("header", {}))


class Unpacked(NamedTuple):
    values: tuple
    verified: bool


def _encode_group(six, max_den, ctx):
    try:
        return codec.encode6(six, max_den, ctx), "n"
    except NoCommonSlopeError:
        # reversing the second pencil inverts its ratio and flips its monotonicity
        rev = six[:3] + six[3:][::-1]
        return codec.encode6(rev, max_den, ctx), "r"


def pack18(xs, mode: str = "literal", max_den: int = DEFAULT_MAX_DEN, ctx: PrecisionContext = EXACT) -> Bundle:
    """Pack 18 scalars (three positional six-tuples) into one bundle.

    literal: 15 reals + (k, D) = 17 stored numbers.
    strict:  18 reals (the literal 15 plus three transversal slopes) + (k, D) = 20.
    """
    if mode not in ("literal", "strict"):
        raise ValueError(f"unknown bundle mode {mode!r}")
    xs = [ctx.num(v) for v in xs]
    if len(xs) != GROUP:
        raise ValueError("need exactly 18 values")
    reals, rats, flags = [], [], []
    for g in range(3):
        try:
            enc, order = _encode_group(tuple(xs[6 * g: 6 * g + 6]), max_den, ctx)
        except CodecError as exc:
            raise PackError(f"group {g}: {type(exc).__name__}: {exc}", group=g, cause=exc) from exc
        lit = enc.literal
        reals += list(enc.reals() if mode == "strict" else lit.reals())
        rats += list(lit.rationals())
        flags.append(lit.B_rat_axis + lit.P0_rat_axis + order)
    header = {**ctx.header(), "bundle_mode": mode, "max_den": max_den, "tie_rules": TIE_RULES}
    return Bundle(mode, tuple(reals), pack12(rats), "".join(flags), header)


def raw_bundle(xs, ctx: PrecisionContext = EXACT) -> Bundle:
    xs = tuple(ctx.num(v) for v in xs)
    return Bundle("raw", xs, None, "", {**ctx.header(), "bundle_mode": "raw"})


def _as_int(v):
    if isinstance(v, int) or type(v) is type(mpz()):
        return int(v)
    if scalar.is_exact(v):
        q = scalar.rat(v) if not isinstance(v, scalar.QuadSurd) else None
        if q is None or q.denominator != 1:
            raise CorruptPackError(f"pair component {v} is not an integer")
        return int(q.numerator)
    n = int(v.context.nint(v))
    return n


def bundle_from_values(values, mode: str, flags: str, ctx: PrecisionContext = EXACT, header=None) -> Bundle:
    """Rebuild a bundle from the values it stored at the next level."""
    values = list(values)
    if mode == "raw":
        return Bundle("raw", tuple(ctx.num(v) for v in values), None, "", header or {})
    k, D = _as_int(values[-2]), _as_int(values[-1])
    return Bundle(mode, tuple(ctx.num(v) for v in values[:-2]), PackedPair(k, D), flags, header or {})


def unpack18(bundle: Bundle, ctx: PrecisionContext = EXACT, s_hypotheses=None, verify: bool = False) -> Unpacked:
    """Recover the 18 values of a bundle.

    Strict bundles are an exact inverse.  Literal bundles need one
    transversal slope per group; the default hypothesis is 0 for every
    group and the result is marked unverified.  With ``verify`` the decoded
    groups are re-encoded and compared against the stored tuples.
    """
    if bundle.mode == "raw":
        return Unpacked(tuple(bundle.reals), True)
    if bundle.pair is None or len(bundle.flags) != 9:
        raise CorruptPackError("bundle is missing its packed pair or flags")
    rats = unpack12(bundle.pair)
    width = 6 if bundle.mode == "strict" else 5
    if len(bundle.reals) != 3 * width:
        raise CorruptPackError(f"{bundle.mode} bundle needs {3 * width} reals")
    if s_hypotheses is None:
        s_hypotheses = [0, 0, 0]
    out = []
    for g in range(3):
        r = bundle.reals[width * g: width * g + width]
        ax_b, ax_p, order = bundle.flags[3 * g: 3 * g + 3]
        if ax_b not in "xy" or ax_p not in "xy" or order not in "nr":
            raise CorruptPackError(f"bad flags {bundle.flags!r}")
        lit = codec.EncodedSix(r[0], r[1], r[2], rats[2 * g], r[3], ax_b, rats[2 * g + 1], r[4], ax_p)
        if bundle.mode == "strict":
            enc = codec.EncodedSixStrict(lit, r[5])
            six = codec.decode6_strict(enc, ctx)
            if verify:
                again = codec.encode6(six, bundle.header.get("max_den", DEFAULT_MAX_DEN), ctx)
                if not (codec.literal_agree(lit, again.literal, ctx) and ctx.eq(again.s, enc.s)):
                    raise CorruptPackError(f"group {g} does not re-encode to its stored tuple")
        else:
            six = codec.decode6_literal(lit, s_hypotheses[g], ctx)
        if order == "r":
            six = six[:3] + six[3:][::-1]
        out += list(six)
    return Unpacked(tuple(out), bundle.mode == "strict")
