"""Kirkpatrick point location over flat or packed node storage.

Pipeline: ``ingest`` a planar straight-line graph, ``bound_and_triangulate``
it inside an enclosing triangle, ``build_dag`` by repeatedly removing an
independent set of low-degree vertices, then ``locate`` (flat) or
``pack_dag`` + ``locate_packed`` (child payloads stored as 18-value bundles).

Coordinates are exact ``mpq`` rationals throughout, so every predicate is
exact.

Packed layout (GLOC1): nodes are numbered in creation order, which puts
every child before its parents.  An internal node's payload lists, for each
child in stored order, its six coordinates followed by its node index.  The
payload is cut into groups of 18; each full group becomes one bundle and the
short tail is kept verbatim.  A group that the codec cannot encode falls back
literal -> strict -> raw and the mode actually used is recorded per group.
"""
from __future__ import annotations

import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

from gmpy2 import mpq

from . import scalar
from .errors import GeopackError, IngestError, PackError, TriangulationError
from .geometry import (ear_clip, in_triangle, orient, point_in_polygon, segments_conflict, signed_area2,
                       triangles_overlap)
from .rational_pack import GROUP, Bundle, pack18, raw_bundle, unpack18
from .scalar import DEFAULT_MAX_DEN, EXACT

OUTER = "OUTER"
DIVERGED = "DIVERGED"
MAGIC = "GLOC1"
MAX_DEGREE = 8
C_CHILD_BOUND = 12
CHILD_WIDTH = 7


# -- subdivision ------------------------------------------------------------

@dataclass(frozen=True)
class Face:
    label: str
    cycle: tuple


@dataclass(frozen=True)
class Subdivision:
    vertices: tuple
    edges: tuple
    faces: tuple
    outer_cycle: tuple = ()

    @property
    def bbox(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def face_points(self, face: Face):
        return [self.vertices[i] for i in face.cycle]

    def to_record(self) -> dict:
        return {
            "vertices": [[scalar.format_rat(x), scalar.format_rat(y)] for x, y in self.vertices],
            "edges": [list(e) for e in self.edges],
            "faces": [{"label": f.label, "cycle": list(f.cycle)} for f in self.faces],
        }


def _coord(v, locus):
    if isinstance(v, bool):
        raise IngestError("coordinate must be numeric", locus)
    try:
        if isinstance(v, str):
            return mpq(v)
        return scalar.rat(v)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise IngestError(f"bad coordinate {v!r}", locus) from exc


def _angle_key(d):
    """Sort key for direction vectors by angle in [0, 2*pi), exact."""
    half = 0 if (d[1] > 0 or (d[1] == 0 and d[0] > 0)) else 1
    return half, _Slope(d)


class _Slope:
    __slots__ = ("d",)

    def __init__(self, d):
        self.d = d

    def __lt__(self, other):
        return orient((0, 0), self.d, other.d) > 0

    def __eq__(self, other):
        return orient((0, 0), self.d, other.d) == 0


def _check_crossings(verts, edges):
    """Grid-bucketed pairwise segment test; raises on the first conflict."""
    m = len(edges)
    x0, y0 = min(v[0] for v in verts), min(v[1] for v in verts)
    x1, y1 = max(v[0] for v in verts), max(v[1] for v in verts)
    cells = max(1, int(math.isqrt(m)))
    wx = (x1 - x0) / cells or mpq(1)
    wy = (y1 - y0) / cells or mpq(1)

    def cell(v):
        return (min(cells - 1, int(math.floor((v[0] - x0) / wx))),
                min(cells - 1, int(math.floor((v[1] - y0) / wy))))

    buckets = defaultdict(list)
    for k, (i, j) in enumerate(edges):
        (ax, ay), (bx, by) = cell(verts[i]), cell(verts[j])
        for cx in range(min(ax, bx), max(ax, bx) + 1):
            for cy in range(min(ay, by), max(ay, by) + 1):
                buckets[cx, cy].append(k)
    seen = set()
    for members in buckets.values():
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                ka, kb = members[a], members[b]
                if (ka, kb) in seen:
                    continue
                seen.add((ka, kb))
                (i, j), (u, w) = edges[ka], edges[kb]
                if segments_conflict(verts[i], verts[j], verts[u], verts[w]):
                    raise IngestError("edges cross", f"edges {list(edges[ka])} and {list(edges[kb])}")


def _trace_faces(verts, edges):
    nbrs = defaultdict(list)
    for i, j in edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    order = {}
    for v, ns in nbrs.items():
        ns.sort(key=lambda w: _angle_key((verts[w][0] - verts[v][0], verts[w][1] - verts[v][1])))
        order[v] = {w: k for k, w in enumerate(ns)}
    used = set()
    cycles = []
    for i, j in edges:
        for start in ((i, j), (j, i)):
            if start in used:
                continue
            cyc = []
            u, v = start
            while (u, v) not in used:
                used.add((u, v))
                cyc.append(u)
                ns = nbrs[v]
                # next edge keeps the face on the left: previous neighbour of v in ccw order
                w = ns[(order[v][u] - 1) % len(ns)]
                u, v = v, w
            cycles.append(tuple(cyc))
    return cycles


def _canonical(cycle):
    k = cycle.index(min(cycle))
    return cycle[k:] + cycle[:k]


def ingest(doc) -> Subdivision:
    """Validate a subdivision document (mapping or JSON text)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise IngestError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise IngestError("document must be a mapping")
    raw_v = doc.get("vertices")
    if not isinstance(raw_v, list) or not raw_v:
        raise IngestError("vertex list is empty or missing")
    verts = []
    for k, p in enumerate(raw_v):
        if not isinstance(p, (list, tuple)) or len(p) != 2:
            raise IngestError("vertex must be a coordinate pair", f"vertex {k}")
        verts.append((_coord(p[0], f"vertex {k}"), _coord(p[1], f"vertex {k}")))
    first = {}
    for k, p in enumerate(verts):
        if p in first:
            raise IngestError("duplicate vertex", f"vertices {first[p]} and {k}")
        first[p] = k
    raw_e = doc.get("edges")
    if not isinstance(raw_e, list) or not raw_e:
        raise IngestError("edge list is empty or missing")
    edges = []
    seen = set()
    n = len(verts)
    for k, e in enumerate(raw_e):
        if (not isinstance(e, (list, tuple)) or len(e) != 2
                or not all(isinstance(t, int) and not isinstance(t, bool) for t in e)):
            raise IngestError("edge must be a pair of vertex indices", f"edge {k}")
        i, j = e
        if not (0 <= i < n and 0 <= j < n):
            raise IngestError("edge index out of range", f"edge {k}")
        if i == j:
            raise IngestError("edge is a loop", f"edge {k}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise IngestError("duplicate edge", f"edge {k}")
        seen.add(key)
        edges.append(key)
    deg = [0] * n
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    for v in range(n):
        if deg[v] < 2:
            raise IngestError("open face boundary: vertex has degree < 2", f"vertex {v}")
    # connectivity
    adj = defaultdict(list)
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    stack, reach = [0], {0}
    while stack:
        for w in adj[stack.pop()]:
            if w not in reach:
                reach.add(w)
                stack.append(w)
    if len(reach) != n:
        raise IngestError("graph is not connected", f"vertex {min(set(range(n)) - reach)}")
    _check_crossings(verts, edges)
    inner, outer = [], []
    for cyc in _trace_faces(verts, edges):
        area = signed_area2([verts[i] for i in cyc])
        (inner if area > 0 else outer).append(cyc)
    if len(outer) != 1:
        raise IngestError(f"expected one unbounded face, found {len(outer)}")
    for cyc in inner:
        if len(set(cyc)) != len(cyc):
            raise IngestError("face boundary is not simple", f"face through vertices {sorted(set(cyc))[:6]}")
    inner = sorted((_canonical(c) for c in inner), key=lambda c: (len(c), c))
    labels = [f"F{k}" for k in range(len(inner))]
    given = doc.get("faces")
    if given is not None:
        by_set = {frozenset(c): k for k, c in enumerate(inner)}
        for t, f in enumerate(given):
            if not isinstance(f, dict) or "cycle" not in f or "label" not in f:
                raise IngestError("face entry needs label and cycle", f"face {t}")
            key = frozenset(f["cycle"])
            if key not in by_set or len(f["cycle"]) != len(inner[by_set[key]]):
                raise IngestError("face does not match a bounded region of the graph", f"face {t}")
            labels[by_set[key]] = str(f["label"])
    faces = tuple(Face(lab, c) for lab, c in zip(labels, inner))
    return Subdivision(tuple(verts), tuple(edges), faces, outer[0])


# -- triangulation ------------------------------------------------------------

@dataclass(frozen=True)
class TriangulatedMap:
    points: tuple
    triangles: tuple
    labels: tuple
    corners: tuple
    n_input: int


def _ceil_sqrt(q) -> int:
    """Smallest integer >= sqrt(q) for a nonnegative rational q."""
    r = math.isqrt(int(math.floor(q)))
    while r * r < q:
        r += 1
    return r


def bound_and_triangulate(sub: Subdivision) -> TriangulatedMap:
    verts = list(sub.vertices)
    n = len(verts)
    xmin, ymin, xmax, ymax = sub.bbox
    diam = _ceil_sqrt((xmax - xmin) ** 2 + (ymax - ymin) ** 2)
    if diam == 0:
        raise TriangulationError("subdivision has zero extent")
    margin = 3 * diam
    x0, y0 = xmin - margin, ymin - margin
    w = (xmax - xmin) + (ymax - ymin) + 4 * margin
    corners = ((x0, y0), (x0 + w, y0), (x0, y0 + w))
    pts = verts + [tuple(map(mpq, c)) for c in corners]
    c0, c1, c2 = n, n + 1, n + 2
    tris, labels = [], []
    for face in sub.faces:
        poly = [pts[i] for i in face.cycle]
        if len(poly) < 3 or signed_area2(poly) == 0:
            raise TriangulationError(f"face {face.label} has a collinear boundary")
        cyc = list(face.cycle) if signed_area2(poly) > 0 else list(face.cycle)[::-1]
        for t in (ear_clip(cyc, pts) if len(cyc) > 3 else [tuple(cyc)]):
            tris.append(t)
            labels.append(face.label)
    hole = list(sub.outer_cycle)
    if not hole:
        raise TriangulationError("subdivision has no outer boundary")
    if signed_area2([pts[i] for i in hole]) > 0:
        hole = hole[::-1]
    h = min(range(len(hole)), key=lambda k: pts[hole[k]])
    hole = hole[h:] + hole[:h]
    ring = [c0, c1, c2, c0] + hole + [hole[0]]
    for t in ear_clip(ring, pts):
        tris.append(t)
        labels.append(OUTER)
    total = sum(orient(pts[a], pts[b], pts[c]) for a, b, c in tris)
    if total != orient(*corners):
        raise TriangulationError("triangles do not tile the enclosing triangle")
    return TriangulatedMap(tuple(pts), tuple(tris), tuple(labels), (c0, c1, c2), n)


# -- DAG ---------------------------------------------------------------------

@dataclass
class Node:
    tri: tuple
    children: list
    label: str | None
    level: int


@dataclass
class LocatorDAG:
    points: tuple
    nodes: list
    root: int
    n0: int
    rounds: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.rounds)

    def coords(self, k):
        return tuple(self.points[i] for i in self.nodes[k].tri)

    @property
    def c_child(self) -> int:
        return max((len(nd.children) for nd in self.nodes), default=0)

    def to_record(self) -> dict:
        return {
            "magic": MAGIC,
            "header": {"magic": MAGIC, "mode": "flat", "n0": self.n0, "node_count": len(self.nodes),
                       "order": "creation (children before parents)"},
            "points": [[scalar.format_rat(x), scalar.format_rat(y)] for x, y in self.points],
            "root": self.root,
            "rounds": self.rounds,
            "nodes": [{"tri": list(nd.tri), "children": nd.children, "label": nd.label, "level": nd.level}
                      for nd in self.nodes],
        }

    @classmethod
    def from_record(cls, rec: dict):
        if rec.get("magic") != MAGIC or rec["header"].get("mode") != "flat":
            raise ValueError("not a flat GLOC1 locator")
        pts = tuple((mpq(x), mpq(y)) for x, y in rec["points"])
        nodes = [Node(tuple(nd["tri"]), list(nd["children"]), nd["label"], nd["level"]) for nd in rec["nodes"]]
        return cls(pts, nodes, rec["root"], rec["header"]["n0"], list(rec["rounds"]))

    def path_depth(self) -> int:
        """Longest root-to-leaf path, counted in edges."""
        memo = {}
        for k, nd in enumerate(self.nodes):
            memo[k] = 0 if not nd.children else 1 + max(memo[c] for c in nd.children)
        return memo[self.root]


def _link_polygon(v, tris):
    nxt = {}
    for t in tris:
        k = t.index(v)
        a, b = t[(k + 1) % 3], t[(k + 2) % 3]
        nxt[a] = b
    start = min(nxt)
    ring, cur = [start], nxt[start]
    while cur != start:
        ring.append(cur)
        cur = nxt[cur]
    if len(ring) != len(tris):
        raise AssertionError(f"vertex {v} does not have a closed star")
    return ring


def build_dag(tm: TriangulatedMap) -> LocatorDAG:
    pts = tm.points
    nodes = [Node(tuple(t), [], lab, 0) for t, lab in zip(tm.triangles, tm.labels)]
    alive = set(range(len(nodes)))
    incident = defaultdict(set)
    for k, nd in enumerate(nodes):
        for v in nd.tri:
            incident[v].add(k)
    corner = set(tm.corners)
    rounds = []
    level = 0
    while len(alive) > 1:
        level += 1
        before = len(alive)
        chosen, blocked = [], set()
        for v in sorted(incident):
            if v in corner or v in blocked or not incident[v] or len(incident[v]) > MAX_DEGREE:
                continue
            chosen.append(v)
            for k in incident[v]:
                blocked.update(nodes[k].tri)
        if not chosen:
            raise AssertionError(f"round {level}: no removable vertex")
        max_children = 0
        for v in chosen:
            old = sorted(incident[v])
            ring = _link_polygon(v, [nodes[k].tri for k in old])
            new_tris = ear_clip(ring, pts)
            new_ids = []
            for t in new_tris:
                nodes.append(Node(tuple(t), [], None, level))
                new_ids.append(len(nodes) - 1)
            for j in new_ids:
                tnew = [pts[i] for i in nodes[j].tri]
                kids = [k for k in old if triangles_overlap(tnew, [pts[i] for i in nodes[k].tri])]
                nodes[j].children = kids
                max_children = max(max_children, len(kids))
            for k in old:
                alive.discard(k)
                for u in nodes[k].tri:
                    incident[u].discard(k)
            for j in new_ids:
                alive.add(j)
                for u in nodes[j].tri:
                    incident[u].add(j)
            del incident[v]
        after = len(alive)
        if 23 * after > 22 * before:
            raise AssertionError(f"round {level}: triangle count {before} -> {after} decays too slowly")
        rounds.append({"round": level, "removed": len(chosen), "triangles_before": before,
                       "triangles_after": after, "max_children": max_children})
    root = next(iter(alive))
    dag = LocatorDAG(pts, nodes, root, tm.n_input, rounds)
    if dag.c_child > C_CHILD_BOUND:
        raise AssertionError(f"child count {dag.c_child} exceeds {C_CHILD_BOUND}")
    return dag


# -- queries -----------------------------------------------------------------

class LocateResult(NamedTuple):
    label: str
    visits: int
    unpacks: int = 0


def _point(q):
    return (scalar.rat(q[0]), scalar.rat(q[1]))


def locate(dag: LocatorDAG, q) -> LocateResult:
    """Descend from the root; the first containing child in stored order wins."""
    q = _point(q)
    if not in_triangle(q, *dag.coords(dag.root)):
        return LocateResult(OUTER, 0)
    k, visits = dag.root, 1
    while dag.nodes[k].children:
        for c in dag.nodes[k].children:
            if in_triangle(q, *dag.coords(c)):
                k = c
                break
        else:
            raise AssertionError(f"children of node {k} do not cover the query")
        visits += 1
    return LocateResult(dag.nodes[k].label, visits)


class FaceScanOracle:
    """O(n) scan over faces; bounding boxes prefilter with numpy, exact test decides."""

    def __init__(self, sub: Subdivision):
        import numpy as np

        self.sub = sub
        self.polys = [sub.face_points(f) for f in sub.faces]
        boxes = []
        for poly in self.polys:
            xs = [float(p[0]) for p in poly]
            ys = [float(p[1]) for p in poly]
            boxes.append((min(xs), min(ys), max(xs), max(ys)))
        self.boxes = np.array(boxes, dtype=float).reshape(-1, 4)
        span = max(1.0, float(np.abs(self.boxes).max()) if len(boxes) else 1.0)
        self.slack = span * 1e-12
        self._np = np

    def locate(self, q):
        """Face label, OUTER, or None when q lies on a face boundary."""
        np = self._np
        q = _point(q)
        x, y = float(q[0]), float(q[1])
        b, e = self.boxes, self.slack
        hits = np.nonzero((b[:, 0] - e <= x) & (x <= b[:, 2] + e) & (b[:, 1] - e <= y) & (y <= b[:, 3] + e))[0]
        for k in hits:
            r = point_in_polygon(q, self.polys[k])
            if r == 0:
                return None
            if r > 0:
                return self.sub.faces[k].label
        return OUTER


def random_delaunay(n: int, seed: int, span: int = 10**6) -> dict:
    """Subdivision document: Delaunay triangulation of n distinct random integer points."""
    import numpy as np
    from scipy.spatial import Delaunay

    rng = np.random.default_rng(seed)
    pts = set()
    while len(pts) < n:
        for x, y in rng.integers(0, span, size=(n - len(pts), 2)).tolist():
            pts.add((x, y))
    pts = sorted(pts)
    tri = Delaunay(np.array(pts, dtype=float))
    edges = set()
    for a, b, c in tri.simplices.tolist():
        pa, pb, pc = pts[a], pts[b], pts[c]
        if orient(pa, pb, pc) == 0:
            continue
        for i, j in ((a, b), (b, c), (c, a)):
            edges.add((min(i, j), max(i, j)))
    return {"vertices": [list(p) for p in pts], "edges": sorted(edges)}


def random_queries(sub: Subdivision, count: int, seed: int, off_boundary: bool = True,
                   oracle: FaceScanOracle | None = None):
    """Random rational points in the subdivision's box grown by 10% per side."""
    rng = random.Random(seed)
    xmin, ymin, xmax, ymax = sub.bbox
    dx, dy = (xmax - xmin) / 10, (ymax - ymin) / 10
    den = 2**20
    oracle = oracle or FaceScanOracle(sub)
    out = []
    while len(out) < count:
        q = (xmin - dx + (xmax - xmin + 2 * dx) * mpq(rng.randrange(den + 1), den),
             ymin - dy + (ymax - ymin + 2 * dy) * mpq(rng.randrange(den + 1), den))
        if off_boundary and oracle.locate(q) is None:
            continue
        out.append(q)
    return out


# -- packed storage ------------------------------------------------------------

@dataclass(frozen=True)
class PackedNode:
    coords: tuple
    bundles: tuple
    tail: tuple
    child_count: int
    group_modes: str


@dataclass(frozen=True)
class PackedLocator:
    mode: str
    max_den: int
    nodes: tuple
    labels: dict
    root: int
    header: dict

    def fallback_counts(self) -> dict:
        out = {"literal": 0, "strict": 0, "raw": 0}
        for nd in self.nodes:
            for ch in nd.group_modes:
                out[{"l": "literal", "s": "strict", "r": "raw"}[ch]] += 1
        return out

    def to_record(self) -> dict:
        return {
            "magic": MAGIC,
            "header": self.header,
            "root": self.root,
            "labels": {str(k): v for k, v in sorted(self.labels.items())},
            "nodes": [{
                "coords": [scalar.format_scalar(v) for v in nd.coords],
                "bundles": [b.to_record() for b in nd.bundles],
                "tail": [scalar.format_scalar(v) for v in nd.tail],
                "child_count": nd.child_count,
                "group_modes": nd.group_modes,
            } for nd in self.nodes],
        }

    @classmethod
    def from_record(cls, rec: dict):
        if rec.get("magic") != MAGIC:
            raise ValueError("not a GLOC1 locator")
        nodes = tuple(PackedNode(tuple(scalar.parse_scalar(v) for v in nd["coords"]),
                                 tuple(Bundle.from_record(b) for b in nd["bundles"]),
                                 tuple(scalar.parse_scalar(v) for v in nd["tail"]),
                                 nd["child_count"], nd["group_modes"]) for nd in rec["nodes"])
        h = rec["header"]
        return cls(h["mode"], h["max_den"], nodes, {int(k): v for k, v in rec["labels"].items()}, rec["root"], h)


def _pack_group(group, mode, max_den):
    chain = ("literal", "strict") if mode == "literal" else ("strict",)
    for m in chain:
        try:
            return pack18(group, m, max_den, EXACT), m[0]
        except PackError:
            continue
    return raw_bundle(group, EXACT), "r"


def pack_dag(dag: LocatorDAG, mode: str = "strict", max_den: int = DEFAULT_MAX_DEN) -> PackedLocator:
    """Pack every node's child payload, children first."""
    if mode not in ("literal", "strict"):
        raise ValueError(f"unknown mode {mode!r}")
    packed = []
    labels = {}
    for k, nd in enumerate(dag.nodes):
        coords = tuple(c for p in dag.coords(k) for c in p)
        payload = []
        for c in nd.children:
            payload += [v for p in dag.coords(c) for v in p]
            payload.append(mpq(c))
        nb = len(payload) // GROUP
        bundles, modes = [], []
        for j in range(nb):
            b, m = _pack_group(payload[GROUP * j: GROUP * (j + 1)], mode, max_den)
            bundles.append(b)
            modes.append(m)
        packed.append(PackedNode(coords, tuple(bundles), tuple(payload[GROUP * nb:]), len(nd.children),
                                 "".join(modes)))
        if not nd.children:
            labels[k] = nd.label
    header = {"magic": MAGIC, "mode": mode, "max_den": max_den, "n0": dag.n0, "node_count": len(packed),
              "child_width": CHILD_WIDTH, "group": GROUP, "fallback": "literal>strict>raw",
              "order": "creation (children before parents)"}
    return PackedLocator(mode, max_den, tuple(packed), labels, dag.root, header)


def _node_children(pk: PackedLocator, k: int):
    nd = pk.nodes[k]
    values = []
    for b in nd.bundles:
        values += unpack18(b, EXACT).values
    values += nd.tail
    if len(values) != CHILD_WIDTH * nd.child_count:
        raise ValueError(f"node {k}: payload length mismatch")
    kids = []
    for c in range(nd.child_count):
        v = values[CHILD_WIDTH * c: CHILD_WIDTH * (c + 1)]
        idx = v[6]
        if not scalar.is_exact(idx) or isinstance(idx, scalar.QuadSurd) or scalar.rat(idx).denominator != 1:
            raise ValueError(f"node {k}: child index {idx} is not an integer")
        idx = int(scalar.rat(idx))
        if not 0 <= idx < len(pk.nodes):
            raise ValueError(f"node {k}: child index {idx} out of range")
        kids.append((idx, ((v[0], v[1]), (v[2], v[3]), (v[4], v[5]))))
    return kids, len(nd.bundles)


def locate_packed(pk: PackedLocator, q) -> LocateResult:
    """Descend decoding only visited nodes' bundles.

    Literal bundles are decoded with transversal-slope hypothesis 0; any
    decode failure there is reported as DIVERGED rather than raised.
    """
    q = _point(q)
    c = pk.nodes[pk.root].coords
    if not in_triangle(q, (c[0], c[1]), (c[2], c[3]), (c[4], c[5])):
        return LocateResult(OUTER, 0, 0)
    k, visits, unpacks = pk.root, 1, 0
    while pk.nodes[k].child_count:
        try:
            kids, used = _node_children(pk, k)
            unpacks += used
            for idx, tri in kids:
                if in_triangle(q, *tri):
                    k = idx
                    break
            else:
                raise ValueError(f"node {k}: no child contains the query")
        except (GeopackError, ArithmeticError, ValueError, ZeroDivisionError):
            if pk.mode == "literal":
                return LocateResult(DIVERGED, visits, unpacks)
            raise
        visits += 1
    if k not in pk.labels:
        if pk.mode == "literal":
            return LocateResult(DIVERGED, visits, unpacks)
        raise ValueError(f"node {k} has no label")
    return LocateResult(pk.labels[k], visits, unpacks)


def build_locator(doc):
    """ingest -> bound_and_triangulate -> build_dag."""
    sub = ingest(doc)
    return sub, build_dag(bound_and_triangulate(sub))
