"""Point location: build a triangle hierarchy on a Delaunay subdivision and query it."""
import math

from geopack import kirkpatrick as kp

sub, dag = kp.build_locator(kp.random_delaunay(1000, seed=5))
print(f"{len(sub.faces)} faces, {len(dag.nodes)} nodes, depth {dag.depth} "
      f"({dag.depth / math.log2(1000):.2f} log2 n), max children {dag.c_child}")
for r in dag.rounds[:5]:
    print("round", r)

oracle = kp.FaceScanOracle(sub)
queries = kp.random_queries(sub, 2000, seed=6, oracle=oracle)
flat = [kp.locate(dag, q) for q in queries]
print("oracle agreement", sum(r.label == oracle.locate(q) for r, q in zip(flat, queries)), "/", len(queries))

pk = kp.pack_dag(dag, "strict")
packed = [kp.locate_packed(pk, q) for q in queries]
print("packed == flat", sum(a.label == b.label for a, b in zip(flat, packed)), "/", len(queries),
      "max unpacks", max(r.unpacks for r in packed), "group modes", pk.fallback_counts())

square = {"vertices": [[0, 0], [4, 0], [4, 4], [0, 4]], "edges": [[0, 1], [1, 2], [2, 3], [3, 0], [0, 2]],
          "faces": [{"label": "lower", "cycle": [0, 1, 2]}]}
_, small = kp.build_locator(square)
for q in ((3, 1), (1, 3), (9, 9)):
    print(q, kp.locate(small, q).label)
