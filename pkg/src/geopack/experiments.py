"""Deterministic experiment reports: collision, precision growth, DAG depth.

Every report is a plain dict with ``config`` first; ``dumps`` renders it
with a fixed layout so identical configs give byte-identical text.
"""
from __future__ import annotations

import json
import math
import random

from gmpy2 import mpq

from . import codec, hierarchy, kirkpatrick, scalar
from .scalar import DEFAULT_MAX_DEN, EXACT, PrecisionContext

WORKED_SIX = (1, 2, 3, -1, -2, -3)
SWEEP = tuple(mpq(k, 10) for k in range(-5, 6))
GROWTH_SIZES = (18, 324, 1000, 10_000)
DEPTH_SIZES = (100, 1000, 10_000)
DEPTH_FACTOR = 6


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=True) + "\n"


def random_rationals(n: int, seed: int, bits: int = 31):
    rng = random.Random(seed)
    return [mpq(rng.randint(-(2**bits), 2**bits), rng.randint(1, 2**bits)) for _ in range(n)]


def sweep_report(six=WORKED_SIX, hypotheses=SWEEP, max_den: int = DEFAULT_MAX_DEN, ctx: PrecisionContext = EXACT):
    rows = []
    for row in codec.hypothesis_sweep([ctx.num(v) for v in six], hypotheses, max_den, ctx):
        rows.append({
            "s_hypothesis": scalar.format_scalar(row["s_hypothesis"]),
            "decoded": None if row["decoded"] is None else [scalar.format_scalar(v) for v in row["decoded"]],
            "agrees": row["agrees"],
            "distinct": row["distinct"],
            "error": row["error"],
        })
    agreeing = [r["s_hypothesis"] for r in rows if r["agrees"]]
    return {"six": [scalar.format_scalar(ctx.num(v)) for v in six], "rows": rows,
            "agreeing_hypotheses": len(agreeing),
            "distinct_agreeing_decodes": len({tuple(r["decoded"]) for r in rows if r["agrees"]})}


def collision_report(seed: int, trials: int, max_den: int = DEFAULT_MAX_DEN, ctx: PrecisionContext = EXACT) -> dict:
    search = codec.collision_search(seed, trials, max_den, ctx)
    sweep = sweep_report(max_den=max_den, ctx=ctx)
    refuted = search["collisions"] > 0 or sweep["distinct_agreeing_decodes"] > 1
    return {
        "config": {"kind": "collision", "seed": seed, "trials": trials, "max_den": max_den, **ctx.header()},
        "search": search,
        "worked_example_sweep": sweep,
        "literal_injectivity": "refuted" if refuted else "unrefuted",
        "basis": "exemplars" if refuted else "no exemplar found",
    }


def precision_growth_report(seed: int, sizes=GROWTH_SIZES, max_den: int = DEFAULT_MAX_DEN,
                            literal_bits: int | None = None) -> dict:
    """Strict exact packing per n; optional literal rows at ``literal_bits``."""
    rows = []
    for n in sizes:
        xs = random_rationals(n, seed)
        pa = hierarchy.pack_all(xs, "strict", max_den, EXACT)
        st = hierarchy.stats(pa)
        row = {
            "n": n,
            "mode": "strict",
            "level_count": st["level_count"],
            "root_count": st["root_count"],
            "root_bits": st["root_bits"],
            "input_bits": st["input_bits"],
            "bits_per_element": round(st["bits_per_element"], 3),
            "conserves_information": st["root_bits"] >= st["input_bits"],
        }
        if literal_bits is not None:
            ctx = PrecisionContext.precision(literal_bits)
            pl = hierarchy.pack_all(xs, "literal", max_den, ctx, on_degenerate="perturb-raw")
            sl = hierarchy.stats(pl)
            row.update({
                "literal_level_count": sl["level_count"],
                "literal_recurrence_levels": len(hierarchy.level_sizes(n, "literal")) - 1,
                "literal_log_bound": sl["log_bound"],
                "literal_root_count": sl["root_count"],
                "literal_root_bits": sl["root_bits"],
                "literal_lossy_integer_slots": sl["lossy_integer_slots"],
                "literal_raw_bundles": sum(r["raw_bundles"] for r in sl["levels"]),
                "literal_perturbed": sum(r["perturbed"] for r in sl["levels"]),
            })
        rows.append(row)
    bits = [r["root_bits"] for r in rows]
    return {
        "config": {"kind": "precision-growth", "seed": seed, "sizes": list(sizes), "max_den": max_den,
                   "literal_bits": literal_bits},
        "rows": rows,
        "root_bits_monotone": all(a <= b for a, b in zip(bits, bits[1:])),
        "all_conserve_information": all(r["conserves_information"] for r in rows),
    }


def depth_row(n: int, seed: int) -> dict:
    sub, dag = kirkpatrick.build_locator(kirkpatrick.random_delaunay(n, seed))
    ratio = dag.depth / math.log2(n)
    decay = max(r["triangles_after"] / r["triangles_before"] for r in dag.rounds)
    return {
        "n": n,
        "seed": seed,
        "nodes": len(dag.nodes),
        "depth": dag.depth,
        "depth_over_log2n": round(ratio, 4),
        "c_child": dag.c_child,
        "worst_round_decay": round(decay, 4),
        "pass": dag.depth <= DEPTH_FACTOR * math.log2(n) and 23 * decay <= 22,
    }


def depth_report(seed: int, sizes=DEPTH_SIZES, seeds: int = 1) -> dict:
    rows = [depth_row(n, seed + k) for n in sizes for k in range(seeds)]
    return {
        "config": {"kind": "depth", "seed": seed, "sizes": list(sizes), "seeds": seeds,
                   "depth_factor": DEPTH_FACTOR},
        "rows": rows,
        "max_depth_over_log2n": max(r["depth_over_log2n"] for r in rows),
        "all_pass": all(r["pass"] for r in rows),
    }
