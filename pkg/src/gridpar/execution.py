"""Kernel launch engine.

A launch covers the padded site range with chunks of ``vvl`` consecutive
sites.  Chunks are the unit of thread-level parallelism: a chunk is owned by
exactly one worker.  Inside a chunk, the lanes ``0..vvl-1`` are the
instruction-level dimension; suite kernels express the lane loop as numpy
array operations over the lane axis, which is the vector form of the ILP loop.

For throughput a worker hands a kernel several consecutive chunks at once
(a :class:`SiteChunk` with ``nchunks > 1``).  Lane order, masking and
ownership rules are unchanged by this batching.
"""

from __future__ import annotations

import atexit
import os
import threading
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, InvalidArgumentError, LaunchError, NumericalDomainError
from .layout import LayoutDescriptor
from .memspace import ConstantTable, Coherence, FieldPair, TargetBuffer

__all__ = [
    "FieldView",
    "LaunchConfig",
    "SiteChunk",
    "for_each_lane",
    "launch",
    "synchronize",
]

BACKENDS = ("serial", "threads")
_BACKEND_ALIASES = {"serial": "serial", "threads": "threads", "threaded": "threads"}


def default_workers() -> int:
    return os.cpu_count() or 1


@dataclass(frozen=True)
class LaunchConfig:
    backend: str = "serial"
    nworkers: int | None = None
    vvl: int = 1
    deterministic: bool = True
    # sites handed to one kernel call; rounded down to whole chunks
    batch_sites: int = 16384

    def __post_init__(self):
        backend = _BACKEND_ALIASES.get(self.backend)
        if backend is None:
            raise InvalidArgumentError(f"unknown backend {self.backend!r}; use serial or threads")
        object.__setattr__(self, "backend", backend)
        if self.nworkers is None:
            object.__setattr__(self, "nworkers", default_workers())
        for name in ("nworkers", "vvl", "batch_sites"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {value!r}")

    @property
    def workers(self) -> int:
        """Worker count actually used (serial always runs on one)."""
        return 1 if self.backend == "serial" else self.nworkers

    @property
    def chunks_per_call(self) -> int:
        return max(1, self.batch_sites // self.vvl)


@dataclass(frozen=True)
class SiteChunk:
    """``nchunks`` consecutive chunks of ``vvl`` lanes starting at ``base_site``.

    Lanes whose site is ``>= nsites`` (the logical site count) are inactive.
    """

    base_site: int
    vvl: int
    nsites: int
    nchunks: int = 1

    @property
    def size(self) -> int:
        return self.vvl * self.nchunks

    @property
    def stop(self) -> int:
        return self.base_site + self.size

    @property
    def nactive(self) -> int:
        return min(max(self.nsites - self.base_site, 0), self.size)

    @property
    def full(self) -> bool:
        return self.nactive == self.size

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.base_site, self.stop, dtype=np.int64)

    @property
    def active_sites(self) -> np.ndarray:
        return np.arange(self.base_site, self.base_site + self.nactive, dtype=np.int64)

    @property
    def mask(self) -> np.ndarray:
        return self.sites < self.nsites

    def split(self):
        """Yield the single chunks making up this span, in ascending order."""
        for k in range(self.nchunks):
            yield SiteChunk(self.base_site + k * self.vvl, self.vvl, self.nsites)


def for_each_lane(chunk: SiteChunk, body):
    """Run ``body(lane)`` for each active lane of a single chunk, ascending.

    Scalar spelling of the ILP lane loop; inactive lanes are skipped.
    """
    if chunk.nchunks != 1:
        raise InvalidArgumentError("for_each_lane takes a single chunk; iterate chunk.split()")
    for lane in range(chunk.nactive):
        body(lane)


class FieldView:
    """Kernel-side handle on a target buffer interpreted through a layout."""

    def __init__(self, buffer: TargetBuffer, layout: LayoutDescriptor | None = None):
        layout = layout if layout is not None else buffer.layout
        if layout is None:
            raise InvalidArgumentError("target buffer has no layout; pass one explicitly")
        if buffer.count != layout.total:
            raise InvalidArgumentError(
                f"buffer has {buffer.count} elements but layout needs {layout.total}"
            )
        self.buffer = buffer
        self.layout = layout
        self.data = buffer.data
        self.written = False
        # component-contiguous layouts allow slice access instead of gathers
        self._contiguous = layout.ncomponents == 1 or layout.is_soa

    def _offsets(self, comp, chunk: SiteChunk, count: int):
        if self._contiguous:
            start = comp * self.layout.nsites_padded + chunk.base_site
            return slice(start, start + count)
        sites = np.arange(chunk.base_site, chunk.base_site + count, dtype=np.int64)
        return self.layout.indices(comp, sites, check=False)

    def _check(self, comp, chunk):
        if not 0 <= comp < self.layout.ncomponents:
            raise BoundsError(f"component {comp} outside [0, {self.layout.ncomponents})")
        if chunk.stop > self.layout.nsites_padded:
            raise BoundsError("chunk extends past the padded site range")

    def load(self, comp: int, chunk: SiteChunk) -> np.ndarray:
        """Values of ``comp`` on the active lanes of ``chunk``, in lane order."""
        self._check(comp, chunk)
        return self.data[self._offsets(comp, chunk, chunk.nactive)]

    def load_all(self, comp: int, chunk: SiteChunk) -> np.ndarray:
        """Like :meth:`load` but including inactive lanes, which read padding."""
        self._check(comp, chunk)
        return self.data[self._offsets(comp, chunk, chunk.size)]

    def store(self, comp: int, chunk: SiteChunk, values):
        """Write one value per lane of ``comp``; values for inactive lanes are dropped.

        ``values`` may cover every lane, only the active lanes, or be a scalar.
        """
        self._check(comp, chunk)
        n = chunk.nactive
        self.written = True
        if n == 0:
            return
        values = np.asarray(values)
        if values.shape == (chunk.size,):
            values = values[:n]
        elif values.ndim != 0 and values.shape != (n,):
            raise InvalidArgumentError(f"expected {chunk.size} lane values, got shape {values.shape}")
        self.data[self._offsets(comp, chunk, n)] = values

    def load_sites(self, comp: int, sites) -> np.ndarray:
        """Gather ``comp`` at arbitrary sites, e.g. stencil neighbours in other chunks."""
        return self.data[self.layout.indices(comp, sites)]


class _Launch:
    """Per-launch bookkeeping: converts arguments to views and runs chunk spans."""

    def __init__(self, kernel, nsites, args, consts, cfg):
        self.kernel = kernel
        self.cfg = cfg
        self.consts = consts.snapshot() if consts is not None else ConstantTable().snapshot()
        self.pairs = []
        self.args = []
        layouts = []
        for arg in args:
            if isinstance(arg, FieldPair):
                view = FieldView(arg.target, arg.layout)
                self.pairs.append((arg, view))
            elif isinstance(arg, TargetBuffer):
                view = FieldView(arg)
            elif isinstance(arg, FieldView):
                view = arg
            else:
                self.args.append(arg)
                continue
            layouts.append(view.layout)
            self.args.append(view)
        if not layouts:
            raise InvalidArgumentError("launch needs at least one field argument")
        padded = {lay.nsites_padded for lay in layouts}
        if len(padded) != 1:
            raise InvalidArgumentError(f"fields disagree on padded site count: {sorted(padded)}")
        for lay in layouts:
            if lay.nsites_logical != nsites:
                raise InvalidArgumentError(
                    f"launch over {nsites} sites but a field has {lay.nsites_logical}"
                )
        self.nsites = nsites
        self.padded = padded.pop()
        if self.padded % cfg.vvl:
            raise InvalidArgumentError(
                f"padded site count {self.padded} is not a multiple of vvl={cfg.vvl}; "
                "build the layout with the launch vvl"
            )
        self.nchunks = self.padded // cfg.vvl

    def spans(self, first: int, stop: int):
        step = self.cfg.chunks_per_call
        vvl = self.cfg.vvl
        for c in range(first, stop, step):
            yield SiteChunk(c * vvl, vvl, self.nsites, min(step, stop - c))

    def run_range(self, first: int, stop: int):
        for span in self.spans(first, stop):
            try:
                self.kernel(span, self.consts, *self.args)
            except NumericalDomainError:
                raise
            except Exception as exc:
                name = getattr(self.kernel, "__name__", repr(self.kernel))
                raise LaunchError(
                    f"kernel {name} failed on chunks at sites [{span.base_site}, {span.stop}): {exc}"
                ) from exc

    def task_ranges(self):
        n = self.nchunks
        if self.cfg.backend == "serial":
            return [(0, n)]
        if self.cfg.deterministic:
            # block decomposition: worker w always owns the same contiguous chunks
            ntasks = self.cfg.nworkers
        else:
            # finer tasks let idle workers take over pending work
            ntasks = 4 * self.cfg.nworkers
        ntasks = max(1, min(ntasks, n))
        bounds = [n * k // ntasks for k in range(ntasks + 1)]
        return [(bounds[k], bounds[k + 1]) for k in range(ntasks) if bounds[k] < bounds[k + 1]]


_executors: dict[int, ThreadPoolExecutor] = {}
_executors_lock = threading.Lock()


def get_executor(nworkers: int) -> ThreadPoolExecutor:
    with _executors_lock:
        pool = _executors.get(nworkers)
        if pool is None:
            pool = ThreadPoolExecutor(max_workers=nworkers, thread_name_prefix=f"gridpar-{nworkers}")
            _executors[nworkers] = pool
        return pool


@atexit.register
def _shutdown_executors():
    with _executors_lock:
        for pool in _executors.values():
            pool.shutdown(wait=False)
        _executors.clear()


def run_tasks(fn, tasks, cfg: LaunchConfig):
    """Apply ``fn`` to each task on the configured backend; results keep task order."""
    tasks = list(tasks)
    if cfg.backend == "serial" or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    pool = get_executor(cfg.nworkers)
    futures = [pool.submit(fn, t) for t in tasks]
    done, pending = wait(futures, return_when=FIRST_EXCEPTION)
    for fut in futures:
        if fut.done() and fut.exception() is not None:
            for p in pending:
                p.cancel()
            wait(pending)
            raise fut.exception()
    return [f.result() for f in futures]


def launch(kernel, nsites: int, *args, consts: ConstantTable | None = None, cfg: LaunchConfig | None = None):
    """Apply ``kernel`` to every chunk of the padded site range.

    ``kernel(chunk, consts, *views)`` receives a :class:`SiteChunk` span, a
    read-only mapping of constants and the launch arguments, where every
    :class:`FieldPair` or :class:`TargetBuffer` has been wrapped in a
    :class:`FieldView`.  Other arguments are passed through unchanged.
    """
    cfg = cfg if cfg is not None else LaunchConfig()
    state = _Launch(kernel, nsites, args, consts, cfg)
    if consts is not None:
        consts._enter_launch()
    try:
        run_tasks(lambda r: state.run_range(*r), state.task_ranges(), cfg)
    finally:
        if consts is not None:
            consts._exit_launch()
        for pair, view in state.pairs:
            if view.written:
                pair.coherence = Coherence.TARGET_DIRTY


def synchronize():
    """Wait for outstanding launches.

    Both backends complete a launch before :func:`launch` returns, so this is
    a no-op kept at call sites for asynchronous backends.
    """
