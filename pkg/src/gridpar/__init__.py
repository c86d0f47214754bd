"""Portable data-parallel kernels for structured grids.

Tunable AoS/SoA/AoSoA layouts, an explicit host/target memory discipline,
chunked kernel launches with a virtual vector length, reductions, and a
Roofline benchmark harness with a D2Q9 lattice Boltzmann mini-app.
"""

from .errors import (
    BoundsError,
    ContractViolation,
    FreedBufferError,
    GridparError,
    InvalidArgumentError,
    LaunchError,
    NumericalDomainError,
    ResourceError,
)
from .execution import FieldView, LaunchConfig, SiteChunk, for_each_lane, launch, synchronize
from .layout import AOS, SOA, AoSoA, GridShape, LayoutDescriptor, LayoutScheme, make_layout, parse_scheme
from .memspace import (
    ConstantTable,
    FieldPair,
    TargetBuffer,
    copy_const_to_target,
    copy_from_target,
    copy_subset_from_target,
    copy_subset_to_target,
    copy_to_target,
    target_calloc,
    target_free,
    target_malloc,
)
from .reduce import target_double_max, target_double_min, target_double_sum

__version__ = "0.1.0"
