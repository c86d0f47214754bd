"""
Launching kernels over site chunks
==================================

A kernel is a plain function called with a chunk of sites.  Each chunk holds
``vvl`` lanes (the virtual vector length); the last one may have inactive
lanes that fall in the padding.  The same kernel runs serially or on a
thread pool, and the result does not depend on the configuration.
"""

import numpy as np

from gridpar import ConstantTable, FieldPair, LaunchConfig, copy_from_target, copy_to_target, launch
from gridpar.layout import AOS, SOA, AoSoA, make_layout


def axpy(chunk, consts, y, x):
    y.store(0, chunk, consts["alpha"] * x.load(0, chunk) + y.load(0, chunk))


def show_chunks(chunk, consts, field):
    for c in chunk.split():
        print(f"  chunk at site {c.base_site:2d}: mask {c.mask.astype(int)}")


print("10 sites with vvl=4:")
launch(show_chunks, 10, FieldPair(make_layout(10, 1, AOS, 4)),
       cfg=LaunchConfig("serial", vvl=4, batch_sites=4))

# Run one kernel under a handful of configurations and compare bitwise.
rng = np.random.default_rng(0)
x0, y0 = rng.normal(size=(2, 1, 1000))

results = {}
for scheme in (AOS, SOA, AoSoA(8)):
    for cfg in (LaunchConfig("serial", vvl=1), LaunchConfig("threads", 4, vvl=8)):
        lay = make_layout(1000, 1, scheme, cfg.vvl)
        x, y = FieldPair.from_logical(lay, x0), FieldPair.from_logical(lay, y0)
        copy_to_target(x)
        copy_to_target(y)
        launch(axpy, 1000, y, x, consts=ConstantTable(alpha=0.5), cfg=cfg)
        copy_from_target(y)
        results[(str(scheme), str(cfg))] = y.logical().tobytes()

print("\nconfigurations tried:", len(results))
print("distinct results:", len(set(results.values())))
