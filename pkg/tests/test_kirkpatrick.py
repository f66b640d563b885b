import json
import math
import random
from fractions import Fraction

import pytest
from gmpy2 import mpq

from geopack import kirkpatrick as kp
from geopack.errors import IngestError, TriangulationError
from geopack.geometry import ear_clip, in_triangle, orient, point_in_polygon, segments_conflict, signed_area2

SQUARE = {"vertices": [[0, 0], [1, 0], [1, 1], [0, 1]], "edges": [[0, 1], [1, 2], [2, 3], [3, 0], [0, 2]]}
TRIANGLE = {"vertices": [[0, 0], [4, 0], [0, 3]], "edges": [[0, 1], [1, 2], [2, 0]]}


@pytest.fixture(scope="module")
def square():
    sub = kp.ingest(SQUARE)
    tm = kp.bound_and_triangulate(sub)
    return sub, tm, kp.build_dag(tm)


@pytest.fixture(scope="module")
def delaunay():
    sub, dag = kp.build_locator(kp.random_delaunay(200, 11))
    return sub, dag


# -- geometry primitives -------------------------------------------------------

def test_segment_conflicts():
    a, b, c, d = (0, 0), (2, 2), (0, 2), (2, 0)
    assert segments_conflict(a, b, c, d)
    assert not segments_conflict(a, b, b, (3, 0))
    assert segments_conflict(a, (2, 0), (1, 0), (1, 5))  # T-junction
    assert segments_conflict(a, (2, 0), (1, 0), (3, 0))  # collinear overlap
    assert not segments_conflict(a, (1, 0), (1, 0), (2, 0))  # collinear, shared endpoint only
    assert not segments_conflict(a, (1, 0), (2, 0), (3, 0))


def test_point_in_polygon():
    sq = [(0, 0), (2, 0), (2, 2), (0, 2)]
    assert point_in_polygon((1, 1), sq) == 1
    assert point_in_polygon((2, 1), sq) == 0
    assert point_in_polygon((3, 1), sq) == -1


def test_ear_clip_nonconvex():
    pts = [(0, 0), (4, 0), (4, 4), (2, 1), (0, 4)]
    tris = ear_clip(range(5), pts)
    assert len(tris) == 3
    assert sum(orient(*(pts[i] for i in t)) for t in tris) == signed_area2(pts)
    for t in tris:
        a, b, c = (pts[i] for i in t)
        assert orient(a, b, c) > 0
        centroid = (Fraction(a[0] + b[0] + c[0], 3), Fraction(a[1] + b[1] + c[1], 3))
        assert point_in_polygon(centroid, pts) == 1


# -- ingest --------------------------------------------------------------------

def test_ingest_square_counts(square):
    sub, _, _ = square
    assert len(sub.vertices) == 4 and len(sub.edges) == 5 and len(sub.faces) == 2


def test_ingest_rejects_crossing_edges():
    doc = {"vertices": [[0, 0], [2, 2], [0, 2], [2, 0]], "edges": [[0, 1], [1, 2], [2, 3], [3, 0], [2, 0], [1, 3]]}
    with pytest.raises(IngestError, match="cross"):
        kp.ingest({"vertices": [[0, 0], [2, 2], [0, 2], [2, 0]], "edges": [[0, 1], [2, 3], [0, 2], [1, 3]]})
    with pytest.raises(IngestError):
        kp.ingest(doc)


def test_ingest_rejects_empty_and_bad_input():
    with pytest.raises(IngestError, match="empty"):
        kp.ingest({"vertices": [], "edges": []})
    with pytest.raises(IngestError, match="duplicate vertex"):
        kp.ingest({"vertices": [[0, 0], [0, 0], [1, 1]], "edges": [[0, 1], [1, 2], [2, 0]]})
    with pytest.raises(IngestError, match="degree"):
        kp.ingest({"vertices": [[0, 0], [1, 0], [1, 1], [5, 5]], "edges": [[0, 1], [1, 2], [2, 0], [2, 3]]})
    with pytest.raises(IngestError, match="not valid JSON"):
        kp.ingest("{")


def test_ingest_rational_strings_and_labels():
    doc = {"vertices": [["0", "0"], ["1/2", "0"], ["0", "1/3"]], "edges": [[0, 1], [1, 2], [2, 0]],
           "faces": [{"label": "lake", "cycle": [2, 1, 0]}]}
    sub = kp.ingest(json.dumps(doc))
    assert sub.vertices[1] == (mpq(1, 2), 0)
    assert [f.label for f in sub.faces] == ["lake"]
    with pytest.raises(IngestError, match="does not match"):
        kp.ingest({**doc, "faces": [{"label": "x", "cycle": [0, 1]}]})


# -- triangulation -------------------------------------------------------------

def test_square_triangulation_labels(square):
    sub, tm, _ = square
    inner = [lab for lab in tm.labels if lab != kp.OUTER]
    assert sorted(inner) == ["F0", "F1"]
    assert len(tm.triangles) > 2 and all(lab in ("F0", "F1", kp.OUTER) for lab in tm.labels)


def test_enclosing_triangle_margin(square):
    sub, tm, _ = square
    xmin, ymin, xmax, ymax = sub.bbox
    diam2 = (xmax - xmin) ** 2 + (ymax - ymin) ** 2
    c = [tm.points[i] for i in tm.corners]
    for k in range(3):
        a, b = c[k], c[(k + 1) % 3]
        len2 = (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2
        for p in [(xmin, ymin), (xmin, ymax), (xmax, ymin), (xmax, ymax)]:
            # squared distance from p to line ab is orient^2 / |ab|^2
            assert orient(a, b, p) ** 2 >= 9 * diam2 * len2


def test_single_triangle_input():
    tm = kp.bound_and_triangulate(kp.ingest(TRIANGLE))
    assert tm.labels.count("F0") == 1


def test_collinear_face_rejected():
    sub = kp.Subdivision(((mpq(0), mpq(0)), (mpq(1), mpq(1)), (mpq(2), mpq(2))), ((0, 1), (1, 2), (0, 2)),
                         (kp.Face("flat", (0, 1, 2)),), (0, 1, 2))
    with pytest.raises(TriangulationError):
        kp.bound_and_triangulate(sub)


# -- DAG -----------------------------------------------------------------------

def test_single_triangle_dag_depth():
    dag = kp.build_dag(kp.bound_and_triangulate(kp.ingest(TRIANGLE)))
    # the three input vertices are pairwise adjacent, so each round removes one
    assert dag.depth == 3 and dag.path_depth() <= 3


def test_dag_invariants(delaunay):
    sub, dag = delaunay
    n = len(sub.vertices)
    assert dag.c_child <= kp.C_CHILD_BOUND
    assert dag.depth <= 6 * math.log2(n)
    for r in dag.rounds:
        assert 23 * r["triangles_after"] <= 22 * r["triangles_before"]
    assert all(nd.label is not None for nd in dag.nodes if not nd.children)


def test_children_cover_parent(square):
    _, _, dag = square
    rng = random.Random(0)
    for k, nd in enumerate(dag.nodes):
        if not nd.children:
            continue
        a, b, c = dag.coords(k)
        for _ in range(100):
            u, v = mpq(rng.randint(1, 999), 1000), mpq(rng.randint(1, 999), 1000)
            if u + v >= 1:
                u, v = 1 - u, 1 - v
            q = (a[0] + u * (b[0] - a[0]) + v * (c[0] - a[0]), a[1] + u * (b[1] - a[1]) + v * (c[1] - a[1]))
            assert any(in_triangle(q, *dag.coords(ch)) for ch in nd.children)


# -- queries -------------------------------------------------------------------

def test_square_queries(square):
    _, _, dag = square
    assert kp.locate(dag, (mpq(3, 4), mpq(1, 4))).label == "F0"
    assert kp.locate(dag, (mpq(1, 4), mpq(3, 4))).label == "F1"
    assert kp.locate(dag, (-100, -100)) == kp.LocateResult(kp.OUTER, 0)
    assert kp.locate(dag, (2, 2)).label == kp.OUTER


def test_boundary_queries_are_deterministic(square):
    _, _, dag = square
    q = (mpq(1, 2), mpq(1, 2))
    assert kp.locate(dag, q) == kp.locate(dag, q)
    assert kp.locate(dag, q).label in ("F0", "F1")


def test_locate_agrees_with_face_scan(delaunay):
    sub, dag = delaunay
    oracle = kp.FaceScanOracle(sub)
    for q in kp.random_queries(sub, 1000, 3, oracle=oracle):
        assert kp.locate(dag, q).label == oracle.locate(q)


# -- packed storage ------------------------------------------------------------

def test_pack_layout_arithmetic(square):
    _, _, dag = square
    pk = kp.pack_dag(dag, "strict")
    for nd, packed in zip(dag.nodes, pk.nodes):
        width = kp.CHILD_WIDTH * len(nd.children)
        assert len(packed.bundles) == width // 18
        assert len(packed.tail) == width % 18
        assert len(packed.group_modes) == len(packed.bundles)


def test_strict_pack_reproduces_coordinates(delaunay):
    _, dag = delaunay
    pk = kp.pack_dag(dag, "strict")
    for k, nd in enumerate(dag.nodes):
        if not nd.children:
            continue
        kids, _ = kp._node_children(pk, k)
        assert [idx for idx, _ in kids] == nd.children
        assert [tri for _, tri in kids] == [dag.coords(c) for c in nd.children]


def test_locate_packed_equals_locate(delaunay):
    sub, dag = delaunay
    pk = kp.pack_dag(dag, "strict")
    for q in kp.random_queries(sub, 300, 4):
        flat, packed = kp.locate(dag, q), kp.locate_packed(pk, q)
        assert packed.label == flat.label
        assert packed.unpacks <= dag.c_child * dag.depth
    assert kp.locate_packed(pk, (-10**9, -10**9)) == kp.LocateResult(kp.OUTER, 0, 0)


def test_literal_pack_divergence_is_reported(square):
    _, _, dag = square
    pk = kp.pack_dag(dag, "literal")
    res = kp.locate_packed(pk, (mpq(3, 4), mpq(1, 4)))
    assert res.label in ("F0", "F1", kp.OUTER, kp.DIVERGED)


def test_records_roundtrip(square):
    _, _, dag = square
    flat = kp.LocatorDAG.from_record(json.loads(json.dumps(dag.to_record())))
    assert kp.locate(flat, (mpq(3, 4), mpq(1, 4))).label == "F0"
    pk = kp.pack_dag(dag, "strict")
    back = kp.PackedLocator.from_record(json.loads(json.dumps(pk.to_record())))
    assert kp.locate_packed(back, (mpq(3, 4), mpq(1, 4))).label == "F0"
