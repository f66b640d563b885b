"""Codec walkthrough: encode the worked example, decode it, then sweep literal hypotheses."""
from geopack import codec, experiments
from geopack.scalar import PrecisionContext, format_scalar

six = (1, 2, 3, -1, -2, -3)
s = codec.solve_common_slope(six[:3], six[3:])
print("pencils", six[:3], six[3:], "common slope", format_scalar(s))

fig = codec.build_figure(six, s)
print("third line through B, residual", fig.concurrency_residual())

enc = codec.encode6(six)
print("strict tuple", enc.to_record())
print("strict decode", [format_scalar(v) for v in codec.decode6_strict(enc)])

# without the stored slope the decoder must guess it; several guesses re-encode identically
sweep = experiments.sweep_report()
for row in sweep["rows"]:
    print(f"s={row['s_hypothesis']:>6}  agrees={row['agrees']!s:5}  decoded={row['decoded']}")
print("distinct agreeing decodes:", sweep["distinct_agreeing_decodes"])

# an irrational common slope, exact and at 256 bits
six = (1, 2, 4, -1, -3, -4)
print("exact s*", format_scalar(codec.solve_common_slope(six[:3], six[3:])))
ctx = PrecisionContext.precision(256)
out = codec.decode6_strict(codec.encode6(six, ctx=ctx), ctx)
print("256-bit roundtrip", [ctx.mp.nstr(v, 20) for v in out])
