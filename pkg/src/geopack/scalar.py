"""Scalar substrate: exact rationals, exact quadratic surds, and p-bit reals.

Two evaluation modes exist and are never mixed inside one pipeline:

* ``exact`` -- values are ``gmpy2.mpq`` rationals.  Square roots that are not
  rational are carried exactly as :class:`QuadSurd` values ``a + b*sqrt(d)``,
  so a quadratic root and everything computed from it by field operations
  stays exact.
* ``precision`` -- values are ``mpmath`` floats owned by a private
  ``MPContext``, so the working precision never leaks into global state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
import mpmath
from gmpy2 import mpq, mpz
from mpmath import libmp

from .errors import FieldMismatchError, NotInFieldError

Rat = type(mpq())
_MPZ = type(mpz())

DEFAULT_BITS = 256
DEFAULT_MAX_DEN = 2**32

_SMALL_PRIMES = [p for p in range(2, 1000) if all(p % q for q in range(2, int(p**0.5) + 1))]


def is_mpf(x) -> bool:
    return hasattr(x, "_mpf_")


def rat(x) -> Rat:
    """Convert ``x`` to an exact rational without rounding."""
    if isinstance(x, Rat):
        return x
    if isinstance(x, (int, _MPZ, Fraction)):
        return mpq(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return mpq(x)
    if isinstance(x, str):
        return mpq(x.strip())
    if is_mpf(x):
        man, exp = x.man_exp
        if man is None:
            raise ValueError(f"non-finite value {x!r}")
        return mpq(man) * mpq(2) ** exp if exp >= 0 else mpq(man, mpz(2) ** (-exp))
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _squarefree_split(n: int):
    """Return (f, m) with n == f*f*m, removing square factors of small primes."""
    f = 1
    for p in _SMALL_PRIMES:
        pp = p * p
        if pp > n:
            break
        while n % pp == 0:
            n //= pp
            f *= p
    r = gmpy2.isqrt(n)
    if r * r == n:
        return f * int(r), 1
    return f, n


class QuadSurd:
    """Exact element ``a + b*sqrt(d)`` of the real quadratic field Q(sqrt(d)).

    ``d`` is a positive non-square integer.  Results whose irrational part
    cancels come back as plain :data:`Rat` values, so callers never see a
    surd with ``b == 0``.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a, b, d):
        self.a = rat(a)
        self.b = rat(b)
        self.d = mpz(d)

    @staticmethod
    def make(a, b, d):
        if b == 0:
            return rat(a)
        return QuadSurd(a, b, d)

    # -- coercion -----------------------------------------------------------
    def _parts(self, other):
        if isinstance(other, QuadSurd):
            if other.d != self.d:
                raise FieldMismatchError(f"sqrt({self.d}) vs sqrt({other.d})")
            return other.a, other.b
        if isinstance(other, (Rat, int, _MPZ, Fraction)):
            return rat(other), mpq(0)
        return None

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return QuadSurd.make(self.a + p[0], self.b + p[1], self.d)

    __radd__ = __add__

    def __sub__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return QuadSurd.make(self.a - p[0], self.b - p[1], self.d)

    def __rsub__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return QuadSurd.make(p[0] - self.a, p[1] - self.b, self.d)

    def __mul__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        c, e = p
        return QuadSurd.make(self.a * c + self.b * e * self.d, self.a * e + self.b * c, self.d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        c, e = p
        if e == 0:
            if c == 0:
                raise ZeroDivisionError("surd division by zero")
            return QuadSurd.make(self.a / c, self.b / c, self.d)
        n = c * c - e * e * self.d
        return QuadSurd.make((self.a * c - self.b * e * self.d) / n, (self.b * c - self.a * e) / n, self.d)

    def __rtruediv__(self, other):
        p = self._parts(other)
        if p is None:
            return NotImplemented
        return self.inverse() * p[0]

    def inverse(self):
        n = self.norm()
        return QuadSurd.make(self.a / n, -self.b / n, self.d)

    def __neg__(self):
        return QuadSurd(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = mpq(1)
        for _ in range(k):
            out = self * out
        return out

    def conjugate(self):
        return QuadSurd(self.a, -self.b, self.d)

    def norm(self) -> Rat:
        return self.a * self.a - self.b * self.b * self.d

    # -- ordering -----------------------------------------------------------
    def sign(self) -> int:
        sa, sb = _sign(self.a), _sign(self.b)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        return sa if self.a * self.a > self.b * self.b * self.d else sb

    def _cmp(self, other):
        p = self._parts(other)
        if p is None:
            return None
        return QuadSurd(self.a - p[0], self.b - p[1], self.d).sign()

    def __eq__(self, other):
        if isinstance(other, QuadSurd):
            return self.d == other.d and self.a == other.a and self.b == other.b
        if isinstance(other, (Rat, int, _MPZ, Fraction)):
            return False  # b != 0 by construction
        return NotImplemented

    def __hash__(self):
        return hash((self.a, self.b, int(self.d)))

    def __lt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c >= 0

    def __floor__(self):
        bn, bd = int(self.b.numerator), int(self.b.denominator)
        scale = 1 << 64
        root = int(gmpy2.isqrt(bn * bn * int(self.d) * scale * scale))
        guess = self.a + _sign(self.b) * mpq(root, bd * scale)
        n = int(gmpy2.floor(guess))
        while self < n:
            n -= 1
        while self >= n + 1:
            n += 1
        return n

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(float(self.d))

    def to_mpf(self, mp):
        return _rat_to_mpf(self.a, mp) + _rat_to_mpf(self.b, mp) * mp.sqrt(mp.mpf(int(self.d)))

    def sqrt(self):
        """Exact square root inside Q(sqrt(d)); raises NotInFieldError otherwise."""
        if self.sign() < 0:
            raise ValueError("square root of a negative surd")
        n = self.norm()
        t = _rat_sqrt(n) if n >= 0 else None
        if t is not None:
            for u2 in ((self.a + t) / 2, (self.a - t) / 2):
                u = _rat_sqrt(u2) if u2 > 0 else None
                if u is None:
                    continue
                v = self.b / (2 * u)
                root = QuadSurd.make(u, v, self.d)
                if root < 0:
                    root = -root
                if root * root == self:
                    return root
        raise NotInFieldError(f"sqrt of {self} is not in Q(sqrt({self.d}))")

    def bits(self) -> int:
        parts = (self.a.numerator, self.a.denominator, self.b.numerator, self.b.denominator, self.d)
        return sum(int(abs(v)).bit_length() for v in parts)

    def __repr__(self):
        return f"QuadSurd({self.a}, {self.b}, {self.d})"

    def __str__(self):
        return format_scalar(self)


def _rat_sqrt(x: Rat):
    """Rational square root of ``x`` or None."""
    if x < 0:
        return None
    n, d = mpz(x.numerator), mpz(x.denominator)
    rn, rd = gmpy2.isqrt(n), gmpy2.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return mpq(rn, rd)
    return None


def _rat_to_mpf(x: Rat, mp):
    return mp.make_mpf(libmp.from_rational(int(x.numerator), int(x.denominator), mp.prec, libmp.round_nearest))


def exact_sqrt(x, field=None):
    """Exact square root of a nonnegative exact scalar.

    Rational squares stay rational; other rationals open the field
    Q(sqrt(d)), reusing ``field`` when ``x/field`` is a rational square.
    """
    if isinstance(x, QuadSurd):
        return x.sqrt()
    x = rat(x)
    if x < 0:
        raise ValueError("square root of a negative rational")
    r = _rat_sqrt(x)
    if r is not None:
        return r
    if field is not None:
        v = _rat_sqrt(x / field)
        if v is not None:
            return QuadSurd(0, v, field)
    n, den = int(x.numerator), int(x.denominator)
    f, d = _squarefree_split(n * den)
    return QuadSurd(0, mpq(f, den), d)


def field_of(*values):
    """The common quadratic field discriminant of ``values`` (None if all rational)."""
    d = None
    for v in values:
        if isinstance(v, QuadSurd):
            if d is None:
                d = v.d
            elif v.d != d:
                raise FieldMismatchError(f"sqrt({d}) vs sqrt({v.d})")
    return d


def is_exact(x) -> bool:
    return isinstance(x, (Rat, QuadSurd, int, _MPZ, Fraction))


@dataclass(frozen=True)
class PrecisionContext:
    """Evaluation mode plus equality tolerance.

    ``eq_tolerance`` is only consulted in precision mode; it defaults to
    ``2**-(bits//2)`` (``2**-128`` at the default 256 bits).
    """

    mode: str = "exact"
    bits: int = DEFAULT_BITS
    eq_tolerance: Rat | None = None
    _mp: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.mode not in ("exact", "precision"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "precision":
            if self.bits < 64:
                raise ValueError("precision mode needs at least 64 bits")
            tol = mpq(1, 2 ** (self.bits // 2)) if self.eq_tolerance is None else rat(self.eq_tolerance)
            if tol < mpq(2) ** (16 - self.bits):
                raise ValueError(f"eq_tolerance below 2^(16-p) for p={self.bits}")
            object.__setattr__(self, "eq_tolerance", tol)
            mp = mpmath.MPContext()
            mp.prec = self.bits
            object.__setattr__(self, "_mp", mp)

    @classmethod
    def exact(cls):
        return cls("exact")

    @classmethod
    def precision(cls, bits=DEFAULT_BITS, eq_tolerance=None):
        return cls("precision", bits, eq_tolerance)

    @classmethod
    def parse(cls, text: str):
        """Parse ``exact`` or ``p=BITS``."""
        text = text.strip()
        if text == "exact":
            return cls.exact()
        if text.startswith("p="):
            return cls.precision(int(text[2:]))
        raise ValueError(f"mode must be 'exact' or 'p=BITS', got {text!r}")

    @property
    def is_exact(self) -> bool:
        return self.mode == "exact"

    @property
    def mp(self):
        return self._mp

    @property
    def label(self) -> str:
        return "exact" if self.is_exact else f"p={self.bits}"

    def with_bits(self, bits: int) -> "PrecisionContext":
        if self.is_exact:
            return self
        return PrecisionContext.precision(bits)

    def header(self) -> dict:
        return {
            "mode": self.label,
            "precision": None if self.is_exact else self.bits,
            "eq_tolerance": None if self.is_exact else format_rat(self.eq_tolerance),
        }

    # -- values -------------------------------------------------------------
    def num(self, x):
        """Bring ``x`` into this context's number type."""
        if self.is_exact:
            if isinstance(x, QuadSurd):
                return x
            if is_mpf(x):
                raise TypeError("float value in exact mode")
            return rat(x)
        mp = self._mp
        if is_mpf(x):
            return x if x.context is mp else mp.mpf(x)
        if isinstance(x, QuadSurd):
            return x.to_mpf(mp)
        if isinstance(x, float):
            return mp.mpf(x)
        return _rat_to_mpf(rat(x), mp)

    def sqrt(self, x, field=None):
        if self.is_exact:
            return exact_sqrt(x, field)
        return self._mp.sqrt(x)

    def cmp(self, x, y) -> int:
        return compare_with_tol(x, y, self)

    def eq(self, x, y) -> bool:
        return compare_with_tol(x, y, self) == 0

    def is_zero(self, x) -> bool:
        return compare_with_tol(x, 0, self) == 0

    def sign(self, x) -> int:
        return compare_with_tol(x, 0, self)


EXACT = PrecisionContext.exact()


def compare_with_tol(x, y, ctx: PrecisionContext = EXACT) -> int:
    """Three-way comparison: -1 (less), 0 (equal), 1 (greater).

    Exact mode is true trichotomy.  Precision mode reports equality when
    ``|x-y| <= eq_tolerance * max(1, |x|, |y|)``.
    """
    if ctx.is_exact:
        diff = x - y
        return diff.sign() if isinstance(diff, QuadSurd) else _sign(diff)
    mp = ctx.mp
    x, y = ctx.num(x), ctx.num(y)
    diff = x - y
    scale = max(mp.one, abs(x), abs(y))
    if abs(diff) <= _rat_to_mpf(ctx.eq_tolerance, mp) * scale:
        return 0
    return 1 if diff > 0 else -1


def _floor(x) -> int:
    if isinstance(x, QuadSurd):
        return math.floor(x)
    return int(gmpy2.floor(x))


def to_rational_approx(x, max_den: int) -> Rat:
    """Best rational approximation of ``x`` with denominator <= ``max_den``.

    Walks the continued-fraction convergents and finishes with the best
    semiconvergent.  Exact for rationals and for :class:`QuadSurd` inputs;
    p-bit floats are first read as the dyadic rational they represent.
    Ties go to the smaller denominator, then to the even numerator.
    """
    if max_den < 1:
        raise ValueError("max_den must be >= 1")
    if not isinstance(x, QuadSurd):
        x = rat(x)
        if x.denominator <= max_den:
            return x
    p0, q0, p1, q1 = 0, 1, 1, 0
    y = x
    while True:
        a = _floor(y)
        q2 = q0 + a * q1
        if q2 > max_den:
            break
        p0, q0, p1, q1 = p1, q1, p0 + a * p1, q2
        frac = y - a
        if frac == 0:
            return mpq(p1, q1)
        y = 1 / frac
    k = (max_den - q0) // q1
    lo = mpq(p0 + k * p1, q0 + k * q1)
    hi = mpq(p1, q1)
    c = compare_with_tol(abs(lo - x), abs(hi - x))
    if c < 0:
        return lo
    if c > 0:
        return hi
    return min((lo, hi), key=lambda r: (r.denominator, r.numerator % 2, r))


# -- serialization ----------------------------------------------------------

def format_rat(q) -> str:
    q = rat(q)
    return f"{q.numerator}/{q.denominator}"


def format_scalar(x) -> str:
    """Decimal string for p-bit reals, ``num/den`` for rationals,
    ``a+b*sqrt(d)`` for surds."""
    if isinstance(x, QuadSurd):
        b = format_rat(abs(x.b))
        return f"{format_rat(x.a)}{'-' if x.b < 0 else '+'}{b}*sqrt({x.d})"
    if is_mpf(x):
        return libmp.to_str(x._mpf_, libmp.repr_dps(x.context.prec))
    return format_rat(x)


def parse_scalar(s: str, ctx: PrecisionContext = EXACT):
    s = s.strip()
    if "sqrt(" in s:
        head, d = s[:-1].split("*sqrt(")
        cut = max(head.rfind("+"), head.rfind("-"))
        a, b = head[:cut], head[cut:]
        return ctx.num(QuadSurd(mpq(a), mpq(b.lstrip("+")), int(d)))
    if ctx.is_exact:
        return rat(s)
    if "/" in s:
        return ctx.num(rat(s))
    return ctx.mp.mpf(s)


def scalar_bits(x) -> int:
    """Serialized size in bits: exact parts for rationals/surds, p for floats."""
    if isinstance(x, QuadSurd):
        return x.bits()
    if is_mpf(x):
        return x.context.prec
    q = rat(x)
    return int(abs(q.numerator)).bit_length() + int(q.denominator).bit_length()
