"""
Roofline accounting
===================

Every kernel carries an analytic flop and byte count.  Their ratio, the
operational intensity, placed against a machine's ridge point (peak flop/s
over STREAM bandwidth) says whether memory bandwidth or arithmetic limits it.
"""

import warnings

from gridpar import LaunchConfig
from gridpar.bench import PRESETS, MachineModel, attainable_flops, bench_kernel, classify, stream_triad_bandwidth
from gridpar.kernels import COSTS, prepare
from gridpar.layout import AoSoA, GridShape

print("machine      ridge (flop/byte)")
for m in PRESETS.values():
    print(f"{m.name:12s} {m.ridge_point:.1f}")

k40 = PRESETS["k40"]
print("\nkernel        OI      attainable on k40")
for name, cost in COSTS.items():
    print(f"{name:12s} {cost.oi:6.4f}  {attainable_flops(cost.oi, k40) / 1e9:7.2f} Gflop/s  {classify(cost.oi, k40)}")

# A quick measurement on this machine.  Small sizes only warn: the triad may
# then run from cache rather than memory.
with warnings.catch_warnings():
    warnings.simplefilter("ignore", RuntimeWarning)
    bw = stream_triad_bandwidth(2_000_000, reps=5)
print(f"\nthis machine, triad on 2M sites: {bw / 1e9:.2f} GB/s")

here = MachineModel("here", 1e18, bw)
prepared = prepare("collision", GridShape([128, 128]), AoSoA(4), LaunchConfig(vvl=4))
rec = bench_kernel(prepared, here, reps=3)
print(f"collision 128x128: {rec.bandwidth_gbs:.2f} GB/s model bandwidth, {rec.pct_stream:.0f}% of triad")
