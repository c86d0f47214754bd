"""D2Q9 lattice Boltzmann mini-app with BGK collision and periodic propagation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError, NumericalDomainError
from ..execution import LaunchConfig, launch, synchronize
from ..layout import AOS, GridShape, LayoutScheme, make_layout
from ..memspace import ConstantTable, FieldPair, copy_from_target, copy_to_target
from ..reduce import target_double_sum
from .cost import KernelCostModel

NVEL = 9
# rest, four axis directions, four diagonals
VELOCITIES = np.array(
    [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)],
    dtype=np.int64,
)
W_REST, W_AXIS, W_DIAG = 4.0 / 9.0, 1.0 / 9.0, 1.0 / 36.0
WEIGHTS = np.array([W_REST] + [W_AXIS] * 4 + [W_DIAG] * 4)
# velocity pairs (i, opposite of i) with c_i . u written without multiplications by 0/1
_PAIRS = ((1, 3), (2, 4), (5, 7), (6, 8))

# static count of the operations in bgk_update; checked by an operation-counting test
COLLISION_COST = KernelCostModel.from_words("collision", flops=90, reads=NVEL, writes=NVEL)
PROPAGATION_COST = KernelCostModel.from_words("propagation", flops=0, reads=NVEL, writes=NVEL)


def bgk_update(f, omega, one_minus_omega):
    """BGK relaxation of one site's nine populations (scalars or lane arrays).

    Only ``+ - * /`` are used, so the same code runs on numpy lanes and on
    operation-counting scalars.  Returns ``(new_f, rho)``.
    """
    f0, f1, f2, f3, f4, f5, f6, f7, f8 = f
    rho = f0 + f1 + f2 + f3 + f4 + f5 + f6 + f7 + f8
    ux = ((f1 + f5 + f8) - (f3 + f6 + f7)) / rho
    uy = ((f2 + f5 + f6) - (f4 + f7 + f8)) / rho
    base = 1.0 - 1.5 * (ux * ux + uy * uy)
    r_axis = W_AXIS * rho
    r_diag = W_DIAG * rho
    cus = (ux, uy, ux + uy, uy - ux)

    feq = [None] * NVEL
    feq[0] = (W_REST * rho) * base
    for (i, j), cu in zip(_PAIRS, cus):
        r = r_axis if i < 5 else r_diag
        s = 3.0 * cu
        t = base + 4.5 * cu * cu
        feq[i] = r * (t + s)
        feq[j] = r * (t - s)
    new = [one_minus_omega * fi + omega * fe for fi, fe in zip(f, feq)]
    return new, rho


def equilibrium(rho, ux, uy) -> np.ndarray:
    """Equilibrium populations, shape ``(9,) + rho.shape``."""
    rho, ux, uy = np.broadcast_arrays(*(np.asarray(v, dtype=np.float64) for v in (rho, ux, uy)))
    usq = ux * ux + uy * uy
    out = np.empty((NVEL,) + rho.shape)
    for i, (cx, cy) in enumerate(VELOCITIES):
        cu = cx * ux + cy * uy
        out[i] = WEIGHTS[i] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * usq)
    return out


def collision_kernel(chunk, consts, f, shape):
    n = chunk.nactive
    if n == 0:
        return
    pops = [f.load(i, chunk) for i in range(NVEL)]
    new, rho = bgk_update(pops, consts["omega"], consts["one_minus_omega"])
    bad = ~(rho > 0.0)
    if bad.any():
        site = chunk.base_site + int(np.argmax(bad))
        raise NumericalDomainError(
            f"non-positive density {rho[np.argmax(bad)]!r}", site=site, coords=shape.coords_of(site)
        )
    for i in range(NVEL):
        f.store(i, chunk, new[i])


def propagation_kernel(chunk, consts, dst, src, shape):
    sites = chunk.active_sites
    if sites.size == 0:
        return
    x, y = shape.coords_of_sites(sites)
    dst.store(0, chunk, src.load(0, chunk))
    for i in range(1, NVEL):
        cx, cy = VELOCITIES[i]
        upstream = shape.sites_of_coords((x - cx, y - cy))
        dst.store(i, chunk, src.load_sites(i, upstream))


def moments_kernel(chunk, consts, f, rho, jx, jy):
    pops = [f.load(i, chunk) for i in range(NVEL)]
    f0, f1, f2, f3, f4, f5, f6, f7, f8 = pops
    rho.store(0, chunk, f0 + f1 + f2 + f3 + f4 + f5 + f6 + f7 + f8)
    jx.store(0, chunk, (f1 + f5 + f8) - (f3 + f6 + f7))
    jy.store(0, chunk, (f2 + f5 + f6) - (f4 + f7 + f8))


def check_shape(shape: GridShape):
    if shape.ndim != 2:
        raise InvalidArgumentError(f"D2Q9 needs a 2-D grid, got {shape.ndim} dimensions")
    for d in shape.dims:
        # extent 2 would make +1 and -1 neighbours coincide
        if d != 1 and d < 3:
            raise InvalidArgumentError(f"grid extent {d} too small for periodic propagation (need >= 3)")


def _check_tau(tau):
    if not tau > 0.5:
        raise InvalidArgumentError(f"relaxation time must exceed 0.5, got {tau}")


def relaxation_constants(tau: float) -> ConstantTable:
    omega = 1.0 / tau
    return ConstantTable(omega=omega, one_minus_omega=1.0 - omega)


def kernel_lb_collision(f: FieldPair, shape: GridShape, tau: float, cfg: LaunchConfig | None = None,
                        consts: ConstantTable | None = None):
    """In-place BGK collision on the target copy of ``f``."""
    _check_tau(tau)
    if f.layout.ncomponents != NVEL:
        raise InvalidArgumentError("collision needs a 9-component field")
    consts = consts if consts is not None else relaxation_constants(tau)
    launch(collision_kernel, shape.nsites, f, shape, consts=consts, cfg=cfg)


def kernel_lb_propagation(dst: FieldPair, src: FieldPair, shape: GridShape, cfg: LaunchConfig | None = None):
    """``dst_i(x) <- src_i(x - c_i)`` with periodic wrap.  ``dst`` and ``src`` must differ."""
    check_shape(shape)
    if dst is src:
        raise InvalidArgumentError("propagation is double-buffered; dst and src must differ")
    if dst.layout.ncomponents != NVEL or src.layout != dst.layout:
        raise InvalidArgumentError("propagation needs two 9-component fields with one layout")
    launch(propagation_kernel, shape.nsites, dst, src, shape, cfg=cfg)


@dataclass
class Diagnostics:
    step: int
    total_mass: float
    total_momentum_x: float
    total_momentum_y: float

    CSV_HEADER = "step,total_mass,total_momentum_x,total_momentum_y"

    def csv_row(self) -> str:
        return f"{self.step},{self.total_mass!r},{self.total_momentum_x!r},{self.total_momentum_y!r}"

    @classmethod
    def parse(cls, line: str) -> "Diagnostics":
        step, m, px, py = line.strip().split(",")
        return cls(int(step), float(m), float(px), float(py))


def shear_wave_velocity(shape: GridShape, amplitude: float, mode: int = 1):
    """``u_x = amplitude * sin(2 pi mode y / ny)``, ``u_y = 0`` on every site."""
    _, y = shape.coords_of_sites(np.arange(shape.nsites))
    ux = amplitude * np.sin(2.0 * np.pi * mode * y / shape.dims[1])
    return ux, np.zeros_like(ux)


@dataclass
class D2Q9State:
    """Populations of a D2Q9 simulation plus the configuration they run under."""

    shape: GridShape
    tau: float
    f: FieldPair
    cfg: LaunchConfig = field(default_factory=LaunchConfig)
    step: int = 0

    def __post_init__(self):
        check_shape(self.shape)
        _check_tau(self.tau)
        self.consts = relaxation_constants(self.tau)
        layout = self.f.layout
        self._scratch = FieldPair(layout)
        one = make_layout(self.shape.nsites, 1, layout.scheme, self.cfg.vvl)
        self._moments = [FieldPair(one) for _ in range(3)]

    @classmethod
    def from_macroscopic(cls, shape, tau, rho, ux, uy, scheme: LayoutScheme = AOS,
                         cfg: LaunchConfig | None = None) -> "D2Q9State":
        shape = shape if isinstance(shape, GridShape) else GridShape(shape)
        cfg = cfg if cfg is not None else LaunchConfig()
        layout = make_layout(shape.nsites, NVEL, scheme, cfg.vvl)
        f = FieldPair.from_logical(layout, equilibrium(rho, ux, uy))
        copy_to_target(f)
        return cls(shape, tau, f, cfg)

    @property
    def layout(self):
        return self.f.layout

    def collide(self):
        kernel_lb_collision(self.f, self.shape, self.tau, self.cfg, self.consts)

    def propagate(self):
        kernel_lb_propagation(self._scratch, self.f, self.shape, self.cfg)
        self.f, self._scratch = self._scratch, self.f

    def advance(self, steps: int = 1):
        for _ in range(steps):
            try:
                self.collide()
            except NumericalDomainError as exc:
                exc.step = self.step + 1
                raise
            self.propagate()
            self.step += 1
        synchronize()

    def diagnostics(self) -> Diagnostics:
        rho, jx, jy = self._moments
        launch(moments_kernel, self.shape.nsites, self.f, rho, jx, jy, cfg=self.cfg)
        synchronize()
        n = self.shape.nsites
        sums = [target_double_sum(m.target, n, self.cfg) for m in self._moments]
        return Diagnostics(self.step, *sums)

    def populations(self) -> np.ndarray:
        """Host copy of the populations, shape ``(9, nsites)``."""
        copy_from_target(self.f)
        return self.f.logical()

    def macroscopic(self):
        """``(rho, ux, uy)`` per site from a fresh host copy."""
        f = self.populations()
        rho = f.sum(axis=0)
        jx = VELOCITIES[:, 0] @ f
        jy = VELOCITIES[:, 1] @ f
        return rho, jx / rho, jy / rho


def initial_state(shape, tau, amplitude=0.01, scheme: LayoutScheme = AOS, cfg: LaunchConfig | None = None,
                  seed: int | None = None, noise: float = 1e-3) -> D2Q9State:
    """Equilibrium at unit density with a sinusoidal shear wave.

    With ``seed`` set, the density also gets uniform noise of size ``noise``
    drawn from numpy's PCG64 generator, so runs are reproducible everywhere.
    """
    shape = shape if isinstance(shape, GridShape) else GridShape(shape)
    check_shape(shape)
    ux, uy = shear_wave_velocity(shape, amplitude)
    rho = np.ones(shape.nsites)
    if seed is not None:
        rng = np.random.Generator(np.random.PCG64(seed))
        rho += noise * rng.uniform(-1.0, 1.0, shape.nsites)
    return D2Q9State.from_macroscopic(shape, tau, rho, ux, uy, scheme, cfg)


def run_lb_miniapp(shape, tau: float, steps: int, cfg: LaunchConfig | None = None,
                   scheme: LayoutScheme = AOS, state: D2Q9State | None = None,
                   seed: int | None = None, amplitude: float = 0.01):
    """Alternate collision and propagation ``steps`` times.

    Returns the final state and one :class:`Diagnostics` per step, step 0
    (the initial state) included.
    """
    if steps < 0:
        raise InvalidArgumentError("steps must be >= 0")
    if state is None:
        state = initial_state(shape, tau, amplitude, scheme, cfg, seed)
    diags = [state.diagnostics()]
    for _ in range(steps):
        state.advance(1)
        diags.append(state.diagnostics())
    copy_from_target(state.f)
    return state, diags
