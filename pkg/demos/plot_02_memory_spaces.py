"""
Host and target memory
======================

Kernels only ever see the *target* copy of a field.  Data moves between the
host array and the target buffer through explicit copies, and the pair keeps
track of which side is newer.
"""

import numpy as np

from gridpar import ConstantTable, FieldPair, copy_from_target, copy_to_target, target_malloc
from gridpar.errors import FreedBufferError
from gridpar.kernels import kernel_scale
from gridpar.layout import AoSoA, make_layout
from gridpar.memspace import copy_subset_to_target

pair = FieldPair.from_logical(make_layout(8, 3, AoSoA(4)), np.ones((3, 8)))
print("after construction:", pair.coherence.name)
copy_to_target(pair)
print("after copy to target:", pair.coherence.name)

# Constants live in their own table and are frozen while a launch runs.
kernel_scale(pair, ConstantTable(a=2.5))
print("after kernel:", pair.coherence.name)
print("host still holds the old values:", pair.logical()[0, :3])
copy_from_target(pair)
print("after copy back:", pair.logical()[0, :3], pair.coherence.name)

# Fresh target memory is poisoned with NaNs rather than silently zero, so
# forgetting a copy shows up immediately.
buf = target_malloc(4)
print("\nuninitialised target buffer:", buf.data)

# Subset copies move only the listed sites (all their components).
pair.set_logical(np.full((3, 8), 7.0))
copy_subset_to_target(pair, [1, 6])
print("target after subset copy of sites 1 and 6:")
print(pair.layout.unpack(pair.target.data))

pair.free()
try:
    kernel_scale(pair, ConstantTable(a=1.0))
except FreedBufferError as exc:
    print("\nusing a freed field fails loudly:", exc)
