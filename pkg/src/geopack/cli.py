"""``geopack`` command line.

Exit status: 0 success, 2 validation error (bad flags or input), 3 codec or
geometric degeneracy.  Reports are JSON on stdout (or ``--output``); a one
line human summary goes to stderr.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from . import codec, experiments, hierarchy, kirkpatrick, scalar
from .errors import CodecError, CorruptPackError, GeopackError, IngestError, PackError, TriangulationError
from .rational_pack import Bundle, pack18, unpack18
from .scalar import DEFAULT_MAX_DEN, PrecisionContext

EXIT_OK, EXIT_INVALID, EXIT_DEGENERATE = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _read_values(path: str, ctx: PrecisionContext):
    text = Path(path).read_text() if path != "-" else sys.stdin.read()
    return [scalar.parse_scalar(t, ctx) for t in re.split(r"[\s,]+", text.strip()) if t]


def _read_json(path: str):
    text = Path(path).read_text() if path != "-" else sys.stdin.read()
    return json.loads(text)


def _config(args) -> dict:
    skip = {"func", "output"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, result: dict, summary: str):
    report = {"config": _config(args), **{k: v for k, v in result.items() if k != "config"}}
    text = experiments.dumps(report)
    if getattr(args, "output", None):
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    print(summary, file=sys.stderr)


# -- codec --------------------------------------------------------------------

def _codec_encode(args):
    ctx = PrecisionContext.parse(args.mode)
    six = _read_values(args.input, ctx)
    if len(six) != 6:
        raise ValueError(f"need six slopes, got {len(six)}")
    enc = codec.encode6(six, args.max_den, ctx)
    rec = {**enc.to_record(), "header": {**ctx.header(), "max_den": args.max_den}}
    _emit(args, {"encoded": rec}, f"encoded; s = {rec['s']}")


def _codec_decode(args):
    ctx = PrecisionContext.parse(args.mode)
    rec = _read_json(args.input)
    rec = rec.get("encoded", rec)
    if args.strict:
        if "s" not in rec:
            raise ValueError("--strict needs a record with field s")
        six = codec.decode6_strict(codec.EncodedSixStrict.from_record(rec, ctx), ctx)
        verified = True
    else:
        six = codec.decode6_literal(codec.EncodedSix.from_record(rec, ctx),
                                    scalar.parse_scalar(args.s_hypothesis, ctx), ctx)
        verified = False
    out = [scalar.format_scalar(v) for v in six]
    _emit(args, {"six": out, "verified": verified}, "decoded " + " ".join(out))


def _codec_collide(args):
    ctx = PrecisionContext.parse(args.mode)
    rep = codec.collision_search(args.seed, args.trials, args.max_den, ctx)
    _emit(args, {"collision": rep}, f"{rep['collisions']} collisions in {rep['trials']} trials: "
                                    f"literal injectivity {rep['literal_injectivity']}")


# -- pack -----------------------------------------------------------------------

def _pack(args):
    ctx = PrecisionContext.parse(args.precision)
    xs = _read_values(args.input, ctx)
    b = pack18(xs, args.mode, args.max_den, ctx)
    _emit(args, {"bundle": b.to_record(), "stored_count": b.stored_count},
          f"{b.mode} bundle: {b.stored_count} stored values")


def _unpack(args):
    ctx = PrecisionContext.parse(args.precision)
    rec = _read_json(args.input)
    b = Bundle.from_record(rec.get("bundle", rec), ctx)
    res = unpack18(b, ctx, verify=args.verify)
    _emit(args, {"values": [scalar.format_scalar(v) for v in res.values], "verified": res.verified},
          f"unpacked {len(res.values)} values (verified={res.verified})")


# -- hierarchy -------------------------------------------------------------------

def _hier_source(args):
    ctx = PrecisionContext.parse(args.precision)
    if args.input:
        return _read_values(args.input, ctx), ctx
    if args.n is None or args.seed is None:
        raise ValueError("give --input, or --n with --seed")
    return experiments.random_rationals(args.n, args.seed), ctx


def _hier_pack(args):
    xs, ctx = _hier_source(args)
    pa = hierarchy.pack_all(xs, args.mode, args.max_den, ctx, on_degenerate=args.on_degenerate)
    _emit(args, {"packed": pa.to_record()},
          f"{pa.n} values -> {pa.level_count} levels, root {len(pa.root)} stored values")


def _load_packed(args):
    if args.packed:
        rec = _read_json(args.packed)
        return hierarchy.PackedArray.from_record(rec.get("packed", rec))
    xs, ctx = _hier_source(args)
    return hierarchy.pack_all(xs, args.mode, args.max_den, ctx, on_degenerate=args.on_degenerate)


def _hier_fetch(args):
    pa = _load_packed(args)
    res = hierarchy.fetch(pa, args.index)
    _emit(args, {"index": args.index, "value": scalar.format_scalar(res.value), "verified": res.verified,
                 "decompositions": res.decompositions, "bundles_decoded": res.bundles_decoded,
                 "levels": res.levels_touched},
          f"x[{args.index}] = {scalar.format_scalar(res.value)} ({res.decompositions} decompositions)")


def _hier_stats(args):
    pa = _load_packed(args)
    st = hierarchy.stats(pa)
    _emit(args, {"stats": st}, f"n={pa.n} {pa.mode}: {st['level_count']} levels, "
                               f"root {st['root_count']} stored values, {st['root_bits']} bits")


# -- point location -----------------------------------------------------------------

def _pl_build(args):
    sub, dag = kirkpatrick.build_locator(_read_json(args.input))
    if args.backend == "flat":
        rec = dag.to_record()
        extra = ""
    else:
        pk = kirkpatrick.pack_dag(dag, args.backend.split("-")[1], args.max_den)
        rec = pk.to_record()
        extra = f", groups {pk.fallback_counts()}"
    _emit(args, {"locator": rec}, f"{len(dag.nodes)} nodes, depth {dag.depth}, C_child {dag.c_child}{extra}")


def _load_locator(path):
    rec = _read_json(path)
    rec = rec.get("locator", rec)
    if rec["header"]["mode"] == "flat":
        return kirkpatrick.LocatorDAG.from_record(rec)
    return kirkpatrick.PackedLocator.from_record(rec)


def _pl_query(args):
    loc = _load_locator(args.locator)
    q = (scalar.parse_scalar(args.x), scalar.parse_scalar(args.y))
    if isinstance(loc, kirkpatrick.LocatorDAG):
        res = kirkpatrick.locate(loc, q)
    else:
        res = kirkpatrick.locate_packed(loc, q)
    _emit(args, {"label": res.label, "visits": res.visits, "unpacks": res.unpacks}, res.label)


def _pl_verify(args):
    doc = _read_json(args.input) if args.input else kirkpatrick.random_delaunay(args.n, args.seed)
    sub, dag = kirkpatrick.build_locator(doc)
    oracle = kirkpatrick.FaceScanOracle(sub)
    queries = kirkpatrick.random_queries(sub, args.queries, args.seed, oracle=oracle)
    pk = None if args.backend == "flat" else kirkpatrick.pack_dag(dag, args.backend.split("-")[1], args.max_den)
    agree = flat_agree = diverged = 0
    max_visits = max_unpacks = 0
    for q in queries:
        want = oracle.locate(q)
        flat = kirkpatrick.locate(dag, q)
        res = flat if pk is None else kirkpatrick.locate_packed(pk, q)
        agree += res.label == want
        flat_agree += res.label == flat.label
        diverged += res.label == kirkpatrick.DIVERGED
        max_visits = max(max_visits, res.visits)
        max_unpacks = max(max_unpacks, res.unpacks)
    n = len(queries)
    result = {
        "queries": n,
        "oracle_agreement": agree,
        "oracle_agreement_pct": round(100 * agree / n, 4),
        "flat_agreement": flat_agree,
        "diverged": diverged,
        "depth": dag.depth,
        "c_child": dag.c_child,
        "max_visits": max_visits,
        "max_unpacks": max_unpacks,
        "unpack_bound": dag.c_child * dag.depth,
    }
    if pk is not None:
        result["group_modes"] = pk.fallback_counts()
    _emit(args, result, f"{args.backend}: {result['oracle_agreement_pct']}% agreement over {n} queries")


# -- experiments --------------------------------------------------------------------

def _experiment(args):
    if args.kind == "collision":
        rep = experiments.collision_report(args.seed, args.trials, args.max_den, PrecisionContext.parse(args.mode))
        summary = f"literal injectivity {rep['literal_injectivity']}"
    elif args.kind == "precision-growth":
        sizes = tuple(args.sizes) if args.sizes else experiments.GROWTH_SIZES
        rep = experiments.precision_growth_report(args.seed, sizes, args.max_den, args.literal_bits)
        summary = f"root bits monotone: {rep['root_bits_monotone']}"
    else:
        sizes = tuple(args.sizes) if args.sizes else experiments.DEPTH_SIZES
        rep = experiments.depth_report(args.seed, sizes, args.seeds)
        summary = f"max depth/log2 n = {rep['max_depth_over_log2n']}, all pass: {rep['all_pass']}"
    _emit(args, rep, summary)


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geopack", description="Real-number packing codec, hierarchy and point location.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--output", help="write the report here instead of stdout")
        sp.add_argument("--max-den", type=int, default=DEFAULT_MAX_DEN)

    c = sub.add_parser("codec", help="six-slope codec").add_subparsers(dest="sub", required=True,
                                                                      parser_class=_Parser)
    e = c.add_parser("encode")
    e.add_argument("--input", required=True, help="file with six slopes")
    e.add_argument("--mode", default="exact", help="exact or p=BITS")
    common(e)
    e.set_defaults(func=_codec_encode)
    d = c.add_parser("decode")
    d.add_argument("--input", required=True, help="encoded record (JSON)")
    d.add_argument("--mode", default="exact")
    d.add_argument("--strict", action="store_true")
    d.add_argument("--s-hypothesis", default="0")
    common(d)
    d.set_defaults(func=_codec_decode)
    k = c.add_parser("collide")
    k.add_argument("--seed", type=int, required=True)
    k.add_argument("--trials", type=int, required=True)
    k.add_argument("--mode", default="exact")
    common(k)
    k.set_defaults(func=_codec_collide)

    pk = sub.add_parser("pack", help="pack 18 values into one bundle")
    pk.add_argument("--mode", choices=["literal", "strict"], default="strict")
    pk.add_argument("--precision", default="exact", help="exact or p=BITS")
    pk.add_argument("--input", required=True)
    common(pk)
    pk.set_defaults(func=_pack)
    up = sub.add_parser("unpack", help="unpack a bundle")
    up.add_argument("--input", required=True)
    up.add_argument("--precision", default="exact")
    up.add_argument("--verify", action="store_true")
    common(up)
    up.set_defaults(func=_unpack)

    h = sub.add_parser("hier", help="recursive packing").add_subparsers(dest="sub", required=True,
                                                                       parser_class=_Parser)
    for name, fn in (("pack", _hier_pack), ("fetch", _hier_fetch), ("stats", _hier_stats)):
        sp = h.add_parser(name)
        sp.add_argument("--mode", choices=["literal", "strict"], default="strict")
        sp.add_argument("--precision", default="exact")
        sp.add_argument("--input", help="file of values")
        sp.add_argument("--n", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--on-degenerate", choices=["raise", "perturb", "raw", "perturb-raw"], default="raise")
        if name != "pack":
            sp.add_argument("--packed", help="packed array written by 'hier pack'")
        if name == "fetch":
            sp.add_argument("--index", type=int, required=True)
        common(sp)
        sp.set_defaults(func=fn)

    pl = sub.add_parser("pointloc", help="Kirkpatrick point location").add_subparsers(dest="sub", required=True,
                                                                                      parser_class=_Parser)
    b = pl.add_parser("build")
    b.add_argument("--input", required=True, help="subdivision JSON")
    b.add_argument("--backend", choices=["flat", "packed-strict", "packed-literal"], default="flat")
    common(b)
    b.set_defaults(func=_pl_build)
    q = pl.add_parser("query")
    q.add_argument("--locator", required=True, help="locator written by 'pointloc build'")
    q.add_argument("--x", required=True)
    q.add_argument("--y", required=True)
    common(q)
    q.set_defaults(func=_pl_query)
    v = pl.add_parser("verify")
    v.add_argument("--queries", type=int, required=True)
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--input", help="subdivision JSON (default: random Delaunay)")
    v.add_argument("--n", type=int, default=1000)
    v.add_argument("--backend", choices=["flat", "packed-strict", "packed-literal"], default="packed-strict")
    common(v)
    v.set_defaults(func=_pl_verify)

    x = sub.add_parser("experiment", help="experiment reports")
    x.add_argument("kind", choices=["collision", "precision-growth", "depth"])
    x.add_argument("--seed", type=int, required=True)
    x.add_argument("--trials", type=int, default=200)
    x.add_argument("--mode", default="exact")
    x.add_argument("--sizes", type=int, nargs="+")
    x.add_argument("--seeds", type=int, default=1)
    x.add_argument("--literal-bits", type=int)
    common(x)
    x.set_defaults(func=_experiment)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (CodecError, PackError, TriangulationError) as exc:
        print(f"geopack: degenerate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (IngestError, CorruptPackError, GeopackError, ValueError, KeyError, OSError,
            json.JSONDecodeError, IndexError) as exc:
        print(f"geopack: invalid: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
