"""
Deterministic reductions
========================

Floating-point addition is not associative, so a parallel sum normally
depends on how the work was split.  The deterministic mode sums fixed blocks
of 256 values and combines them in a pairwise tree, which gives the same bits
for any number of workers.
"""

import numpy as np

from gridpar import LaunchConfig, copy_to_target, target_malloc
from gridpar.reduce import target_double_max, target_double_min, target_double_sum

x = np.random.Generator(np.random.PCG64(12345)).uniform(-1.0, 1.0, 100_000)
buf = target_malloc(x.size)
copy_to_target(buf, x)

print("deterministic:")
for workers in (1, 2, 3, 8):
    s = target_double_sum(buf, x.size, LaunchConfig("threads", workers, deterministic=True))
    print(f"  {workers} workers: {s.hex()}")

print("non-deterministic (per-worker np.sum, then combined):")
for workers in (1, 2, 3, 8):
    s = target_double_sum(buf, x.size, LaunchConfig("threads", workers, deterministic=False))
    print(f"  {workers} workers: {s.hex()}")

print("\nnaive left-to-right loop:", float(np.cumsum(x)[-1]).hex())
print("math.fsum (exact, rounded):", __import__("math").fsum(x).hex())
print("min / max:", target_double_min(buf, x.size), target_double_max(buf, x.size))
