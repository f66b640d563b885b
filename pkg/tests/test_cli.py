import hashlib
import json
from fractions import Fraction

import pytest

from geopack import experiments
from geopack.scalar import format_scalar
from geopack.cli import EXIT_DEGENERATE, EXIT_INVALID, EXIT_OK, run

GOLDEN_ENCODED = {
    "b1": "-1/1", "b2": "-2/1", "r": "3/1",
    "B_rat": "0/1", "B_real": "2/1", "B_rat_axis": "x",
    "P0_rat": "0/1", "P0_real": "1/1", "P0_rat_axis": "x",
    "s": "0/1",
}
SQUARE = {"vertices": [[0, 0], [1, 0], [1, 1], [0, 1]], "edges": [[0, 1], [1, 2], [2, 3], [3, 0], [0, 2]]}


def call(argv, capsys):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_codec_encode_golden(tmp_path, capsys):
    (tmp_path / "s.txt").write_text("1 2 3 -1 -2 -3\n")
    code, rep = call(["codec", "encode", "--input", str(tmp_path / "s.txt")], capsys)
    assert code == EXIT_OK
    enc = {k: v for k, v in rep["encoded"].items() if k != "header"}
    assert enc == GOLDEN_ENCODED


def test_codec_decode_strict(tmp_path, capsys):
    (tmp_path / "e.json").write_text(json.dumps(GOLDEN_ENCODED))
    code, rep = call(["codec", "decode", "--strict", "--input", str(tmp_path / "e.json")], capsys)
    assert code == EXIT_OK and rep["six"] == ["1/1", "2/1", "3/1", "-1/1", "-2/1", "-3/1"]


def test_exit_codes(tmp_path, capsys):
    (tmp_path / "same.txt").write_text("1 2 3 1 2 3")
    assert run(["codec", "encode", "--input", str(tmp_path / "same.txt")]) == EXIT_DEGENERATE
    (tmp_path / "five.txt").write_text("1 2 3 4 5")
    assert run(["codec", "encode", "--input", str(tmp_path / "five.txt")]) == EXIT_INVALID
    assert run(["codec", "encode", "--no-such-flag"]) == EXIT_INVALID
    assert run(["codec", "collide", "--trials", "3"]) == EXIT_INVALID  # seed is mandatory
    (tmp_path / "x.json").write_text(json.dumps({"vertices": [[0, 0], [2, 2], [0, 2], [2, 0]],
                                                 "edges": [[0, 1], [2, 3], [0, 2], [1, 3]]}))
    assert run(["pointloc", "build", "--input", str(tmp_path / "x.json")]) == EXIT_INVALID
    capsys.readouterr()


def test_hier_stats_literal_18(capsys):
    code, rep = call(["hier", "stats", "--n", "18", "--seed", "1", "--mode", "literal", "--precision", "p=256"],
                     capsys)
    assert code == EXIT_OK
    assert rep["stats"]["root_count"] == 17


def test_hier_pack_then_fetch(tmp_path, capsys):
    out = tmp_path / "p.json"
    assert run(["hier", "pack", "--n", "60", "--seed", "4", "--output", str(out)]) == EXIT_OK
    code, rep = call(["hier", "fetch", "--packed", str(out), "--index", "41"], capsys)
    assert code == EXIT_OK
    assert rep["value"] == format_scalar(experiments.random_rationals(60, 4)[41])


def test_pack_unpack(tmp_path, capsys):
    vals = " ".join(f"{k}/{k + 3}" for k in range(1, 19))
    (tmp_path / "v.txt").write_text(vals)
    out = tmp_path / "b.json"
    assert run(["pack", "--mode", "strict", "--input", str(tmp_path / "v.txt"), "--output", str(out)]) == EXIT_OK
    code, rep = call(["unpack", "--input", str(out), "--verify"], capsys)
    assert code == EXIT_OK
    assert [Fraction(v) for v in rep["values"]] == [Fraction(k, k + 3) for k in range(1, 19)]


def test_pointloc_build_query(tmp_path, capsys):
    (tmp_path / "sq.json").write_text(json.dumps(SQUARE))
    for backend in ("flat", "packed-strict"):
        loc = tmp_path / f"{backend}.json"
        assert run(["pointloc", "build", "--input", str(tmp_path / "sq.json"), "--backend", backend,
                    "--output", str(loc)]) == EXIT_OK
        code, rep = call(["pointloc", "query", "--locator", str(loc), "--x", "3/4", "--y", "1/4"], capsys)
        assert code == EXIT_OK and rep["label"] == "F0"


def test_pointloc_verify_strict(capsys):
    code, rep = call(["pointloc", "verify", "--queries", "300", "--seed", "2", "--n", "150"], capsys)
    assert code == EXIT_OK
    assert rep["oracle_agreement_pct"] == 100.0 and rep["flat_agreement"] == 300


def test_collision_report_byte_identical(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["experiment", "collision", "--seed", "3", "--trials", "25", "--output", str(p)]) == EXIT_OK
    h = [hashlib.sha256(p.read_bytes()).hexdigest() for p in paths]
    assert h[0] == h[1]
    rep = json.loads(paths[0].read_text())
    assert rep["config"]["seed"] == 3 and rep["literal_injectivity"] in ("refuted", "unrefuted")


def test_precision_growth_monotone():
    rep = experiments.precision_growth_report(1, sizes=(18, 324, 1000))
    bits = [r["root_bits"] for r in rep["rows"]]
    assert bits == sorted(bits) and rep["root_bits_monotone"]
    assert rep["all_conserve_information"]


def test_depth_report_flags():
    rep = experiments.depth_report(1, sizes=(100,))
    assert rep["all_pass"] and rep["rows"][0]["depth"] <= 6 * 6.65


def test_inputs_not_mutated(tmp_path, capsys):
    p = tmp_path / "sq.json"
    p.write_text(json.dumps(SQUARE))
    before = p.read_bytes()
    run(["pointloc", "build", "--input", str(p), "--output", str(tmp_path / "o.json")])
    assert p.read_bytes() == before
    capsys.readouterr()
