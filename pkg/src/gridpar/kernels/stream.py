"""Streaming kernels: the three-component scale and the STREAM triad."""

from __future__ import annotations

from ..errors import InvalidArgumentError
from ..execution import LaunchConfig, for_each_lane, launch
from ..memspace import ConstantTable, FieldPair
from .cost import KernelCostModel

# a*x per component: 3 reads, 3 writes
SCALE_COST = KernelCostModel.from_words("scale", flops=3, reads=3, writes=3)
# b + q*c: reads b, c; writes a
TRIAD_COST = KernelCostModel.from_words("triad", flops=2, reads=2, writes=1)


def scale_kernel(chunk, consts, field):
    a = consts["a"]
    for comp in range(3):
        field.store(comp, chunk, a * field.load(comp, chunk))


def scale_kernel_lanewise(chunk, consts, field):
    """Same update as :func:`scale_kernel`, one lane at a time."""
    a = consts["a"]
    data, layout = field.data, field.layout
    for single in chunk.split():
        for comp in range(3):
            def body(lane, base=single.base_site, comp=comp):
                k = layout.index(comp, base + lane)
                data[k] = a * data[k]
            for_each_lane(single, body)
    field.written = True


def kernel_scale(field: FieldPair, consts: ConstantTable, cfg: LaunchConfig | None = None, kernel=scale_kernel):
    """``field[c, s] <- a * field[c, s]`` on the target copy of a 3-component field."""
    if field.layout.ncomponents != 3:
        raise InvalidArgumentError(f"scale needs a 3-component field, got {field.layout.ncomponents}")
    if "a" not in consts:
        raise InvalidArgumentError("constant 'a' not set")
    launch(kernel, field.layout.nsites_logical, field, consts=consts, cfg=cfg)


def triad_kernel(chunk, consts, a, b, c):
    a.store(0, chunk, b.load(0, chunk) + consts["q"] * c.load(0, chunk))


def kernel_triad(a: FieldPair, b: FieldPair, c: FieldPair, consts: ConstantTable, cfg: LaunchConfig | None = None):
    """``a[s] <- b[s] + q * c[s]`` over single-component fields."""
    for name, f in (("a", a), ("b", b), ("c", c)):
        if f.layout.ncomponents != 1:
            raise InvalidArgumentError(f"triad field {name} must have one component")
    if not (a.layout == b.layout == c.layout):
        raise InvalidArgumentError("triad fields must share one layout")
    if "q" not in consts:
        raise InvalidArgumentError("constant 'q' not set")
    launch(triad_kernel, a.layout.nsites_logical, a, b, c, consts=consts, cfg=cfg)
