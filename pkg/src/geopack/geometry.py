"""Exact planar predicates and ear clipping over rational coordinates."""
from __future__ import annotations

from .errors import TriangulationError


def orient(a, b, c):
    """Twice the signed area of triangle abc (positive when counterclockwise)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _sgn(v) -> int:
    return (v > 0) - (v < 0)


def on_segment(p, a, b) -> bool:
    """p lies on the closed segment ab."""
    if orient(a, b, p) != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def segments_conflict(p1, p2, q1, q2) -> bool:
    """True when two segments meet anywhere other than a shared endpoint."""
    shared = {p1, p2} & {q1, q2}
    d1, d2 = _sgn(orient(q1, q2, p1)), _sgn(orient(q1, q2, p2))
    d3, d4 = _sgn(orient(p1, p2, q1)), _sgn(orient(p1, p2, q2))
    if d1 == d2 == d3 == d4 == 0:
        # collinear: conflict unless they only touch at one shared endpoint
        if len(shared) == 2:
            return True
        key = 0 if p1[0] != p2[0] else 1
        lo1, hi1 = sorted((p1[key], p2[key]))
        lo2, hi2 = sorted((q1[key], q2[key]))
        lo, hi = max(lo1, lo2), min(hi1, hi2)
        if lo > hi:
            return False
        return not (lo == hi and shared)
    if shared:
        # non-collinear segments sharing an endpoint meet only there
        return False
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return ((d1 == 0 and on_segment(p1, q1, q2)) or (d2 == 0 and on_segment(p2, q1, q2))
            or (d3 == 0 and on_segment(q1, p1, p2)) or (d4 == 0 and on_segment(q2, p1, p2)))


def signed_area2(pts) -> object:
    n = len(pts)
    return sum(pts[i][0] * pts[(i + 1) % n][1] - pts[(i + 1) % n][0] * pts[i][1] for i in range(n))


def in_triangle(q, a, b, c) -> bool:
    """Closed containment in the counterclockwise triangle abc."""
    return orient(a, b, q) >= 0 and orient(b, c, q) >= 0 and orient(c, a, q) >= 0


def triangles_overlap(t1, t2) -> bool:
    """Interiors of two counterclockwise triangles intersect (separating-edge test)."""
    for s, o in ((t1, t2), (t2, t1)):
        for i in range(3):
            a, b = s[i], s[(i + 1) % 3]
            if all(orient(a, b, p) <= 0 for p in o):
                return False
    return True


def point_in_polygon(q, pts) -> int:
    """1 inside, 0 on the boundary, -1 outside (exact crossing count)."""
    n = len(pts)
    inside = False
    for i in range(n):
        a, b = pts[i], pts[(i + 1) % n]
        if on_segment(q, a, b):
            return 0
        if (a[1] > q[1]) != (b[1] > q[1]):
            # x of the crossing compared with q without division
            t = orient(a, b, q)
            if (t > 0) == (b[1] > a[1]):
                inside = not inside
    return 1 if inside else -1


def ear_clip(idx, coords):
    """Triangulate a counterclockwise (weakly) simple polygon.

    ``idx`` lists vertex ids around the polygon; ids may repeat where a
    bridge or pinch point is traversed twice.  Returns counterclockwise id
    triples.  Raises TriangulationError when no ear exists.
    """
    ring = list(idx)
    if len(ring) < 3:
        raise TriangulationError("polygon has fewer than three vertices")
    if signed_area2([coords[i] for i in ring]) <= 0:
        raise TriangulationError("polygon boundary is degenerate or clockwise")
    out = []
    i = 0
    stall = 0
    while len(ring) > 3:
        m = len(ring)
        ip, ic, inx = ring[(i - 1) % m], ring[i % m], ring[(i + 1) % m]
        a, b, c = coords[ip], coords[ic], coords[inx]
        ok = orient(a, b, c) > 0
        if ok:
            corners = {a, b, c}
            for j in ring:
                p = coords[j]
                if p in corners:
                    continue
                if in_triangle(p, a, b, c):
                    ok = False
                    break
        if ok:
            out.append((ip, ic, inx))
            del ring[i % m]
            i = (i - 1) % (m - 1)
            stall = 0
        else:
            i = (i + 1) % m
            stall += 1
            if stall > m:
                raise TriangulationError(f"no ear among {m} remaining vertices")
    a, b, c = (coords[j] for j in ring)
    if orient(a, b, c) <= 0:
        raise TriangulationError("final triangle is degenerate")
    out.append(tuple(ring))
    return out
