"""Uniform set-up of every suite kernel for sweeps and benchmarks.

``prepare(name, shape, scheme, cfg, seed)`` builds seeded input fields on the
target and returns a :class:`PreparedKernel` whose ``run()`` performs exactly
one launch and whose ``outputs()`` copies the results back as logical
``(ncomponents, nsites)`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError
from ..execution import LaunchConfig, synchronize
from ..layout import GridShape, LayoutScheme, make_layout
from ..memspace import ConstantTable, FieldPair, copy_from_target, copy_to_target
from . import lb
from .cost import KernelCostModel
from .stream import SCALE_COST, TRIAD_COST, kernel_scale, kernel_triad

KERNELS = ("scale", "triad", "collision", "propagation")

COSTS: dict[str, KernelCostModel] = {
    "scale": SCALE_COST,
    "triad": TRIAD_COST,
    "collision": lb.COLLISION_COST,
    "propagation": lb.PROPAGATION_COST,
}

SCALE_A = 2.0
TRIAD_Q = 3.0
TAU = 0.8


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def _pair(layout, values):
    p = FieldPair.from_logical(layout, values)
    copy_to_target(p)
    return p


@dataclass
class PreparedKernel:
    name: str
    shape: GridShape
    scheme: LayoutScheme
    cfg: LaunchConfig
    cost: KernelCostModel
    _run: object
    _outputs: object
    inputs: dict

    @property
    def nsites(self) -> int:
        return self.shape.nsites

    def run(self):
        self._run()
        synchronize()

    def outputs(self) -> list[np.ndarray]:
        out = []
        for pair in self._outputs():
            copy_from_target(pair)
            out.append(pair.logical().copy())
        return out


def prepare(name: str, shape, scheme: LayoutScheme, cfg: LaunchConfig, seed: int = 0,
            scale_a: float = SCALE_A) -> PreparedKernel:
    shape = shape if isinstance(shape, GridShape) else GridShape(shape)
    n = shape.nsites
    rng = _rng(seed)
    vvl = cfg.vvl

    if name == "scale":
        field = _pair(make_layout(n, 3, scheme, vvl), rng.uniform(-1.0, 1.0, (3, n)))
        consts = ConstantTable(a=scale_a)

        def run():
            kernel_scale(field, consts, cfg)
        outputs = lambda: [field]  # noqa: E731
        inputs = {"field": field}

    elif name == "triad":
        layout = make_layout(n, 1, scheme, vvl)
        b = _pair(layout, rng.uniform(-1.0, 1.0, (1, n)))
        c = _pair(layout, rng.uniform(-1.0, 1.0, (1, n)))
        a = _pair(layout, np.zeros((1, n)))
        consts = ConstantTable(q=TRIAD_Q)

        def run():
            kernel_triad(a, b, c, consts, cfg)
        outputs = lambda: [a]  # noqa: E731
        inputs = {"a": a, "b": b, "c": c}

    elif name == "collision":
        lb.check_shape(shape)
        rho = 1.0 + 0.05 * rng.uniform(-1.0, 1.0, n)
        ux, uy = 0.05 * rng.uniform(-1.0, 1.0, (2, n))
        f0 = lb.equilibrium(rho, ux, uy) * (1.0 + 0.01 * rng.uniform(-1.0, 1.0, (lb.NVEL, n)))
        f = _pair(make_layout(n, lb.NVEL, scheme, vvl), f0)
        consts = lb.relaxation_constants(TAU)

        def run():
            lb.kernel_lb_collision(f, shape, TAU, cfg, consts)
        outputs = lambda: [f]  # noqa: E731
        inputs = {"f": f}

    elif name == "propagation":
        lb.check_shape(shape)
        layout = make_layout(n, lb.NVEL, scheme, vvl)
        fields = [_pair(layout, rng.uniform(0.0, 1.0, (lb.NVEL, n))), _pair(layout, np.zeros((lb.NVEL, n)))]

        def run():
            lb.kernel_lb_propagation(fields[1], fields[0], shape, cfg)
            fields.reverse()
        outputs = lambda: [fields[0]]  # noqa: E731
        inputs = {"f": fields[0], "scratch": fields[1]}

    else:
        raise InvalidArgumentError(f"unknown kernel {name!r}; choose from {', '.join(KERNELS)}")

    return PreparedKernel(name, shape, scheme, cfg, COSTS[name], run, outputs, inputs)
