"""Recursive 18 -> 17 packing of n scalars with indexed fetch.

Each level cuts its values into consecutive groups of 18, packs every full
group into one bundle and carries the short tail (< 18 values) through
unchanged.  The bundles' stored numbers, in bundle order, followed by the
tail, form the next level.  Literal mode repeats until fewer than 18 values
remain; strict mode (18 -> 20) stops after the first level because it cannot
shrink.

Fetching index i walks back down from the root, decoding only the bundles
whose stored numbers are needed.  A bundle's stored numbers are contiguous
at the next level, so the set of bundles touched per level stays bounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

from gmpy2 import mpq

from . import scalar
from .errors import CodecError, CorruptPackError, DegenerateGroupError, PackError
from .rational_pack import GROUP, Bundle, bundle_from_values, pack18, raw_bundle, unpack18
from .scalar import DEFAULT_MAX_DEN, EXACT, PrecisionContext

MAGIC = "GPAK1"
PRECISION_STEP = 64


def next_size(size: int, mode: str) -> int:
    per = 17 if mode == "literal" else 20
    return (size // GROUP) * per + size % GROUP


def level_sizes(n: int, mode: str) -> list[int]:
    """Sizes of every level, input first, root last."""
    sizes = [n]
    while sizes[-1] >= GROUP:
        nxt = next_size(sizes[-1], mode)
        sizes.append(nxt)
        if nxt >= sizes[-2]:
            break
    return sizes


def log_bound(n: int) -> int:
    """ceil(log_{18/17} n) + 1 for n >= 2."""
    if n < 2:
        return 1
    return math.ceil(math.log(n) / math.log(18 / 17)) + 1


@dataclass
class Level:
    index: int
    size: int
    bits: int | None
    bundles: list[Bundle]
    tail: int
    offsets: list[int]
    perturbed: list[int] = field(default_factory=list)
    side_s: list | None = None

    @property
    def out_size(self) -> int:
        return self.offsets[-1] + self.tail if self.offsets else self.tail


@dataclass
class PackedArray:
    n: int
    mode: str
    max_den: int
    ctx: PrecisionContext
    levels: list[Level]
    root: list
    policy: dict
    input_bits: int
    lossy_slots: int = 0

    @property
    def level_count(self) -> int:
        return len(self.levels)

    def level_ctx(self, index: int) -> PrecisionContext:
        return _level_ctx(self.ctx, self.mode, index)

    def header(self) -> dict:
        return {
            "magic": MAGIC,
            "n": self.n,
            "mode": self.mode,
            "arithmetic": self.ctx.label,
            "precision": None if self.ctx.is_exact else self.ctx.bits,
            "precision_schedule": self.policy["precision_schedule"],
            "max_den": self.max_den,
            "policy": self.policy,
        }

    def to_record(self) -> dict:
        return {
            "header": self.header(),
            "levels": [
                {
                    "index": lv.index,
                    "size": lv.size,
                    "bits": lv.bits,
                    "tail": lv.tail,
                    "perturbed": lv.perturbed,
                    "bundles": [{"mode": b.mode, "flags": b.flags} for b in lv.bundles],
                    "side_s": None if lv.side_s is None else [
                        None if row is None else [scalar.format_scalar(v) for v in row] for row in lv.side_s],
                }
                for lv in self.levels
            ],
            "root": [scalar.format_scalar(v) for v in self.root],
            "input_bits": self.input_bits,
            "lossy_slots": self.lossy_slots,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "PackedArray":
        h = rec["header"]
        if h.get("magic") != MAGIC:
            raise CorruptPackError("missing GPAK1 header")
        ctx = PrecisionContext.parse(h["arithmetic"])
        mode = h["mode"]
        levels = []
        for lv in rec["levels"]:
            lctx = _level_ctx(ctx, mode, lv["index"])
            bundles = [Bundle(b["mode"], (), None, b["flags"]) for b in lv["bundles"]]
            offsets = [0]
            for b in bundles:
                offsets.append(offsets[-1] + (GROUP if b.mode == "raw" else 17 if b.mode == "literal" else 20))
            side = lv.get("side_s")
            if side is not None:
                side = [None if row is None else [scalar.parse_scalar(v, lctx) for v in row] for row in side]
            levels.append(Level(lv["index"], lv["size"], lv["bits"], bundles, lv["tail"], offsets,
                                list(lv["perturbed"]), side))
        top = _level_ctx(ctx, mode, max(len(levels) - 1, 0))
        root = [scalar.parse_scalar(v, top) for v in rec["root"]]
        return cls(h["n"], mode, h["max_den"], ctx, levels, root, h["policy"], rec.get("input_bits", 0),
                   rec.get("lossy_slots", 0))


def _level_ctx(ctx, mode, index):
    if ctx.is_exact or mode != "literal":
        return ctx
    return ctx.with_bits(ctx.bits + index * PRECISION_STEP)


def perturbation_step(ctx: PrecisionContext):
    """2**(8-p) exactly; in precision mode 2**8 * eq_tolerance, relative to |v|,
    since anything below the equality tolerance cannot separate values."""
    if ctx.is_exact:
        return mpq(1, 2 ** (ctx.bits - 8))
    return 256 * ctx.eq_tolerance


def _perturb(group, ctx):
    eps = perturbation_step(ctx)
    if ctx.is_exact:
        return [v + eps * (i + 1) for i, v in enumerate(group)]
    return [v + ctx.num(eps * (i + 1)) * max(1, abs(v)) for i, v in enumerate(group)]


def pack_all(xs, mode: str = "strict", max_den: int = DEFAULT_MAX_DEN, ctx: PrecisionContext = EXACT,
             on_degenerate: str = "raise", side_channel: bool = False) -> PackedArray:
    """Pack ``xs`` level by level.

    ``on_degenerate`` picks what happens when a group cannot be encoded:
    ``raise`` (DegenerateGroupError with level and group index), ``perturb``
    (add a slot-dependent offset from ``perturbation_step`` and retry once), ``raw``
    (store that group's 18 values verbatim) or ``perturb-raw`` (perturb,
    then fall back to raw).  ``side_channel`` keeps the true
    transversal slopes of literal groups for test-time decoding; they are not
    part of the stored numbers.
    """
    if mode not in ("literal", "strict"):
        raise ValueError(f"unknown mode {mode!r}")
    if on_degenerate not in ("raise", "perturb", "raw", "perturb-raw"):
        raise ValueError(f"unknown degeneracy policy {on_degenerate!r}")
    n = len(xs)
    if n < 1:
        raise ValueError("need at least one value")
    if ctx.is_exact and mode == "literal" and len(level_sizes(n, mode)) > 2:
        raise ValueError("exact literal packing supports one level; use precision mode")
    values = [ctx.num(x) for x in xs]
    input_bits = sum(scalar.scalar_bits(v) for v in values)
    levels: list[Level] = []
    lossy = 0
    while len(values) >= GROUP:
        index = len(levels)
        lctx = _level_ctx(ctx, mode, index)
        nb = len(values) // GROUP
        bundles, out, offsets, perturbed, side = [], [], [0], [], []
        for j in range(nb):
            group = [lctx.num(v) for v in values[GROUP * j: GROUP * j + GROUP]]
            if not lctx.is_exact:
                lossy += sum(1 for v in values[GROUP * j: GROUP * j + GROUP]
                             if scalar.is_exact(v) and int(abs(scalar.rat(v).numerator)).bit_length() > lctx.bits)
            encoded = group
            try:
                b = pack18(group, mode, max_den, lctx)
            except PackError as exc:
                if on_degenerate == "raise":
                    raise DegenerateGroupError(f"level {index}, group {j}: {exc}", level=index, group=j,
                                               cause=exc.cause) from exc
                b = None
                if on_degenerate.startswith("perturb"):
                    try:
                        encoded = _perturb(group, lctx)
                        b = pack18(encoded, mode, max_den, lctx)
                        perturbed.append(j)
                    except PackError as exc2:
                        if on_degenerate == "perturb":
                            raise DegenerateGroupError(f"level {index}, group {j} after perturbation: {exc2}",
                                                       level=index, group=j, cause=exc2.cause) from exc2
                if b is None:
                    b = raw_bundle(group, lctx)
            if side_channel and mode == "literal" and b.mode == "literal":
                side.append(_true_slopes(encoded, b, max_den, lctx))
            else:
                side.append(None)
            bundles.append(b)
            out += b.stored_values()
            offsets.append(len(out))
        tail = values[GROUP * nb:]
        out += tail
        levels.append(Level(index, len(values), None if lctx.is_exact else lctx.bits, bundles, len(tail),
                            offsets, perturbed, side if side_channel else None))
        shrank = len(out) < len(values)
        values = out
        if not shrank:
            break
    schedule = "exact" if ctx.is_exact else (
        f"p+{PRECISION_STEP}*level" if mode == "literal" else f"p={ctx.bits}")
    policy = {
        "precision_schedule": schedule,
        "on_degenerate": on_degenerate,
        "perturbation": ("x[slot] += 2^(8-p)*(slot+1)" if ctx.is_exact
                         else "x[slot] += 2^8*eq_tolerance*max(1,|x|)*(slot+1)"),
        "s_hypothesis": "oracle-side-channel" if side_channel else "zero",
    }
    return PackedArray(n, mode, max_den, ctx, levels, values, policy, input_bits, lossy)


def _true_slopes(group, bundle, max_den, ctx):
    from .rational_pack import _encode_group

    out = []
    for g in range(3):
        six = tuple(group[6 * g: 6 * g + 6])
        enc, _ = _encode_group(six, max_den, ctx)
        out.append(enc.s)
    return out


class PathStep(NamedTuple):
    level: int
    bundle: int
    slots: tuple


class FetchResult(NamedTuple):
    """``decompositions`` counts levels whose window of bundles was decoded;
    ``bundles_decoded`` counts the bundles themselves."""

    value: object
    verified: bool
    decompositions: int
    levels_touched: int
    path: list
    bundles_decoded: int = 0


def _check_index(pa, idx):
    if not 0 <= idx < pa.n:
        raise IndexError(f"index {idx} out of range for n={pa.n}")


def _needed(pa: PackedArray, idx: int):
    """Per level (leaf first): {bundle: slots} needed and the carried positions."""
    positions = {idx}
    plan = []
    for lv in pa.levels:
        nb = len(lv.bundles)
        want: dict[int, set] = {}
        nxt = set()
        for pos in positions:
            if pos < GROUP * nb:
                j = pos // GROUP
                want.setdefault(j, set()).add(pos % GROUP)
            else:
                nxt.add(lv.offsets[-1] + pos - GROUP * nb)
        for j in want:
            nxt.update(range(lv.offsets[j], lv.offsets[j + 1]))
        plan.append((want, positions))
        positions = nxt
    return plan, positions


def path_of(pa: PackedArray, idx: int) -> list[PathStep]:
    """Bundles decoded to reach element ``idx``, ordered root to leaf."""
    _check_index(pa, idx)
    plan, _ = _needed(pa, idx)
    steps = []
    for lv, (want, _) in zip(pa.levels, plan):
        for j in sorted(want):
            steps.append(PathStep(lv.index, j, tuple(sorted(want[j]))))
    steps.sort(key=lambda st: (-st.level, st.bundle))
    return steps


def fetch(pa: PackedArray, idx: int, s_policy: str | None = None) -> FetchResult:
    """Recover element ``idx`` from the root, decoding only bundles on its path.

    Strict arrays return the original exactly (exact mode).  Literal arrays
    decode each group under the array's s-hypothesis policy and the result
    is flagged unverified.
    """
    _check_index(pa, idx)
    policy = s_policy or pa.policy["s_hypothesis"]
    plan, top = _needed(pa, idx)
    known = {pos: pa.root[pos] for pos in top}
    verified = True
    count = steps = 0
    for lv, (want, positions) in zip(reversed(pa.levels), reversed(plan)):
        steps += bool(want)
        lctx = pa.level_ctx(lv.index)
        nb = len(lv.bundles)
        below = {}
        for j in sorted(want):
            meta = lv.bundles[j]
            stored = [known[p] for p in range(lv.offsets[j], lv.offsets[j + 1])]
            hyps = None
            if meta.mode == "literal":
                if policy == "oracle-side-channel" and lv.side_s is not None:
                    hyps = lv.side_s[j]
                else:
                    hyps = [0, 0, 0]
            try:
                b = bundle_from_values(stored, meta.mode, meta.flags, lctx, header={"max_den": pa.max_den})
                res = unpack18(b, lctx, s_hypotheses=hyps)
            except (CodecError, CorruptPackError) as exc:
                raise CorruptPackError(f"fetch {idx}: level {lv.index}, bundle {j}: {exc}") from exc
            count += 1
            verified = verified and res.verified
            for k, v in enumerate(res.values):
                below[GROUP * j + k] = v
        for pos in positions:
            if pos >= GROUP * nb:
                below[pos] = known[lv.offsets[-1] + pos - GROUP * nb]
        known = below
    return FetchResult(known[idx], verified, steps, len(pa.levels), path_of(pa, idx), count)


def stats(pa: PackedArray) -> dict:
    """Per-level stored counts and serialized bit totals."""
    rows = []
    for lv in pa.levels:
        vals = []
        for b in lv.bundles:
            vals += b.stored_values()
        bits = sum(scalar.scalar_bits(v) for v in vals)
        rows.append({
            "level": lv.index,
            "input_count": lv.size,
            "bundles": len(lv.bundles),
            "raw_bundles": sum(1 for b in lv.bundles if b.mode == "raw"),
            "perturbed": len(lv.perturbed),
            "carried": lv.tail,
            "stored_count": lv.out_size,
            "precision": lv.bits,
            "bundle_bits": bits,
        })
    root_bits = sum(scalar.scalar_bits(v) for v in pa.root)
    return {
        **pa.header(),
        "levels": rows,
        "level_count": len(pa.levels),
        "log_bound": log_bound(pa.n),
        "root_count": len(pa.root),
        "root_bits": root_bits,
        "input_bits": pa.input_bits,
        "bits_per_element": root_bits / pa.n,
        "lossy_integer_slots": pa.lossy_slots,
    }
