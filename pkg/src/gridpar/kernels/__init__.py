"""Benchmark kernels and the D2Q9 lattice Boltzmann mini-app."""

from .cost import KernelCostModel
from .lb import (
    COLLISION_COST,
    PROPAGATION_COST,
    D2Q9State,
    Diagnostics,
    equilibrium,
    initial_state,
    kernel_lb_collision,
    kernel_lb_propagation,
    run_lb_miniapp,
)
from .stream import SCALE_COST, TRIAD_COST, kernel_scale, kernel_triad
from .suite import COSTS, KERNELS, prepare

__all__ = [
    "COLLISION_COST",
    "COSTS",
    "D2Q9State",
    "Diagnostics",
    "KERNELS",
    "KernelCostModel",
    "PROPAGATION_COST",
    "SCALE_COST",
    "TRIAD_COST",
    "equilibrium",
    "initial_state",
    "kernel_lb_collision",
    "kernel_lb_propagation",
    "kernel_scale",
    "kernel_triad",
    "prepare",
    "run_lb_miniapp",
]
