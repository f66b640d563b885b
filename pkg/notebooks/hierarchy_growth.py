"""Hierarchy growth: level sizes, stored bits and fetch cost as n grows."""
from geopack import experiments, hierarchy
from geopack.scalar import PrecisionContext

for n in (18, 324, 1000):
    print(n, "literal level sizes", hierarchy.level_sizes(n, "literal")[:6], "... log bound", hierarchy.log_bound(n))

rep = experiments.precision_growth_report(seed=1, sizes=(18, 324, 1000), literal_bits=256)
for row in rep["rows"]:
    print(f"n={row['n']:>5} strict root bits {row['root_bits']:>8} vs input {row['input_bits']:>6}"
          f" | literal levels {row['literal_level_count']} raw bundles {row['literal_raw_bundles']}")

xs = experiments.random_rationals(1000, seed=2)
pa = hierarchy.pack_all(xs, "strict")
res = hierarchy.fetch(pa, 123)
print("strict fetch exact:", res.value == xs[123], "decompositions", res.decompositions)

pl = hierarchy.pack_all(xs, "literal", ctx=PrecisionContext.precision(256), on_degenerate="perturb-raw")
try:
    res = hierarchy.fetch(pl, 123)
    print("literal fetch", res.value, "true", xs[123])
except Exception as exc:
    print("literal fetch failed:", type(exc).__name__, exc)
