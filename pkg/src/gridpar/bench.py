"""Timing harness, STREAM triad measurement and Roofline arithmetic.

Byte and flop counts come from the analytic :class:`KernelCostModel` of each
kernel, not from hardware counters, so reported bandwidths are model
bandwidths: bytes the kernel must move divided by the best observed time.
Run on an otherwise idle machine.
"""

from __future__ import annotations

import csv
import glob
import io
import math
import statistics
import time
import warnings
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import GridparError, InvalidArgumentError
from .execution import LaunchConfig
from .kernels import suite
from .kernels.stream import TRIAD_COST
from .layout import AOS, GridShape

__all__ = [
    "BenchRecord",
    "MachineModel",
    "PRESETS",
    "Timing",
    "attainable_flops",
    "bench_against_stream",
    "bench_kernel",
    "classify",
    "measure",
    "pct_of_stream",
    "read_records",
    "ridge_point",
    "roofline_report",
    "stream_triad_bandwidth",
    "time_runs",
    "write_records",
]

MEMORY_BOUND = "memory-bound"
COMPUTE_BOUND = "compute-bound"


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and value > 0 and math.isfinite(value)):
        raise InvalidArgumentError(f"{name} must be positive and finite, got {value!r}")


def ridge_point(peak_flops: float, stream_bw: float) -> float:
    """Flops per byte at which a machine turns from bandwidth- to compute-limited."""
    _positive("peak_flops", peak_flops)
    _positive("stream_bw", stream_bw)
    return peak_flops / stream_bw


@dataclass(frozen=True)
class MachineModel:
    name: str
    peak_flops: float
    stream_bw: float

    def __post_init__(self):
        _positive("peak_flops", self.peak_flops)
        _positive("stream_bw", self.stream_bw)

    @property
    def ridge_point(self) -> float:
        return ridge_point(self.peak_flops, self.stream_bw)

    @classmethod
    def from_text(cls, text: str, source: str = "<text>") -> "MachineModel":
        """Parse ``name=``, ``peak_gflops=`` and ``stream_gbs=`` lines (``#`` comments allowed)."""
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InvalidArgumentError(f"{source}:{lineno}: expected key=value, got {raw!r}")
            values[key.strip()] = value.strip()
        missing = {"name", "peak_gflops", "stream_gbs"} - values.keys()
        if missing:
            raise InvalidArgumentError(f"{source}: missing keys {sorted(missing)}")
        try:
            return cls(values["name"], float(values["peak_gflops"]) * 1e9, float(values["stream_gbs"]) * 1e9)
        except ValueError as exc:
            raise InvalidArgumentError(f"{source}: {exc}") from exc

    @classmethod
    def from_file(cls, path) -> "MachineModel":
        return cls.from_text(Path(path).read_text(), str(path))

    def to_text(self) -> str:
        return f"name={self.name}\npeak_gflops={self.peak_flops / 1e9!r}\nstream_gbs={self.stream_bw / 1e9!r}\n"


# Double-precision peak and measured STREAM triad of the reference processors.
PRESETS = {
    "ivybridge": MachineModel("ivybridge", 259e9, 49.8e9),
    "haswell": MachineModel("haswell", 154e9, 40.9e9),
    "interlagos": MachineModel("interlagos", 141e9, 32.4e9),
    "xeonphi": MachineModel("xeonphi", 1.01e12, 158.4e9),
    "k20x": MachineModel("k20x", 1.31e12, 181.3e9),
    "k40": MachineModel("k40", 1.43e12, 192.1e9),
}


def attainable_flops(oi: float, machine: MachineModel) -> float:
    """Roofline bound ``min(peak, oi * bandwidth)``."""
    if oi < 0:
        raise InvalidArgumentError(f"operational intensity must be >= 0, got {oi}")
    return min(machine.peak_flops, oi * machine.stream_bw)


def classify(oi: float, machine: MachineModel) -> str:
    return MEMORY_BOUND if oi < machine.ridge_point else COMPUTE_BOUND


def pct_of_stream(kernel_bw: float, stream_bw: float) -> float:
    _positive("kernel_bw", kernel_bw)
    _positive("stream_bw", stream_bw)
    return 100.0 * kernel_bw / stream_bw


@dataclass(frozen=True)
class Timing:
    min: float
    mean: float
    std: float
    samples: tuple


def time_runs(fn, warmup: int = 1, reps: int = 5) -> Timing:
    """Run ``fn`` ``warmup`` times untimed, then ``reps`` times on the monotonic clock."""
    if reps < 1:
        raise InvalidArgumentError("reps must be >= 1")
    if warmup < 0:
        raise InvalidArgumentError("warmup must be >= 0")
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return _timing(samples)


def _timing(samples) -> Timing:
    std = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return Timing(min(samples), statistics.fmean(samples), std, tuple(samples))


def measure(fn, warmup: int = 1, reps: int = 5) -> float:
    """Minimum wall-clock time of ``reps`` timed runs."""
    return time_runs(fn, warmup, reps).min


def estimate_llc_bytes(default: int = 32 * 2**20) -> int:
    """Size of the largest CPU cache reported by sysfs, or ``default``."""
    best = 0
    for path in glob.glob("/sys/devices/system/cpu/cpu0/cache/index*/size"):
        try:
            text = Path(path).read_text().strip()
        except OSError:
            continue
        units = {"K": 2**10, "M": 2**20, "G": 2**30}
        mult = units.get(text[-1:].upper(), 1)
        digits = text[:-1] if text[-1:].upper() in units else text
        if digits.isdigit():
            best = max(best, int(digits) * mult)
    return best or default


def default_stream_sites() -> int:
    """Sites for which the three triad arrays span 4x the last-level cache."""
    return 4 * estimate_llc_bytes() // TRIAD_COST.bytes_per_site


class TriadValidationError(GridparError):
    pass


def stream_triad_bandwidth(n_sites: int | None = None, warmup: int = 1, reps: int = 10,
                           cfg: LaunchConfig | None = None, seed: int = 0) -> float:
    """Bytes per second achieved by the triad kernel (24 bytes per site / min time).

    The triad result is checked against ``b + q*c`` before any timing.  Sizes
    below the cache threshold only raise a :class:`RuntimeWarning`.
    """
    return stream_triad(n_sites, warmup, reps, cfg, seed)[0]


def stream_triad(n_sites=None, warmup=1, reps=10, cfg=None, seed=0):
    """Like :func:`stream_triad_bandwidth` but also returns the :class:`Timing`."""
    cfg = cfg if cfg is not None else LaunchConfig()
    threshold = default_stream_sites()
    if n_sites is None:
        n_sites = threshold
    elif n_sites < threshold:
        warnings.warn(
            f"STREAM size {n_sites} sites is below 4x the last-level cache ({threshold} sites); "
            "bandwidth may reflect cache rather than memory",
            RuntimeWarning,
            stacklevel=3,
        )
    prepared = suite.prepare("triad", GridShape([n_sites]), AOS, cfg, seed)
    check_triad(prepared)
    timing = time_runs(prepared.run, warmup, reps)
    return TRIAD_COST.bytes(n_sites) / timing.min, timing


def check_triad(prepared) -> None:
    """Run the prepared triad once and compare with ``b + q*c`` computed on the host."""
    b, c = prepared.inputs["b"], prepared.inputs["c"]
    prepared.run()
    (out,) = prepared.outputs()
    expected = b.logical() + suite.TRIAD_Q * c.logical()
    if not np.array_equal(out, expected):
        bad = int(np.argmax(out != expected))
        raise TriadValidationError(f"triad result wrong at site {bad}: {out[0, bad]!r} != {expected[0, bad]!r}")


CSV_COLUMNS = (
    "kernel", "layout", "vvl", "backend", "workers", "reps", "min_time_s",
    "bytes", "flops", "bandwidth_gbs", "oi", "pct_stream", "bound_class",
)


@dataclass(frozen=True)
class BenchRecord:
    kernel: str
    layout: str
    vvl: int
    backend: str
    workers: int
    reps: int
    min_time_s: float
    bytes: int
    flops: int
    bandwidth_gbs: float
    oi: float
    pct_stream: float
    bound_class: str
    mean_time_s: float | None = field(default=None, compare=False)
    std_time_s: float | None = field(default=None, compare=False)

    @classmethod
    def build(cls, kernel, layout, vvl, backend, workers, reps, min_time_s, bytes_moved, flops,
              machine: MachineModel, mean_time_s=None, std_time_s=None) -> "BenchRecord":
        if not min_time_s > 0:
            raise InvalidArgumentError("min_time_s must be positive")
        bw = Fraction(bytes_moved) / Fraction(min_time_s)
        oi = Fraction(flops, bytes_moved)
        return cls(
            kernel, str(layout), int(vvl), backend, int(workers), int(reps), float(min_time_s),
            int(bytes_moved), int(flops), float(bw / 10**9), float(oi),
            pct_of_stream(float(bw), machine.stream_bw), classify(float(oi), machine),
            mean_time_s, std_time_s,
        )

    @property
    def bandwidth(self) -> float:
        return self.bandwidth_gbs * 1e9

    @property
    def bandwidth_exact(self) -> Fraction:
        """Bandwidth as the exact rational ``bytes / min_time_s`` (bytes per second)."""
        return Fraction(self.bytes) / Fraction(self.min_time_s)

    @property
    def oi_exact(self) -> Fraction:
        return Fraction(self.flops, self.bytes)

    def is_consistent(self) -> bool:
        """Recorded floats are the correctly rounded values of the exact rationals."""
        return (
            self.bandwidth_exact * Fraction(self.min_time_s) == self.bytes
            and self.oi_exact * self.bytes == self.flops
            and self.bandwidth_gbs == float(self.bandwidth_exact / 10**9)
            and self.oi == float(self.oi_exact)
        )

    def csv_row(self) -> list[str]:
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            out.append(repr(v) if isinstance(v, float) else str(v))
        return out


class RecordParseError(InvalidArgumentError):
    pass


_CASTS = {f.name: f.type for f in fields(BenchRecord)}


def write_records(records, stream=None) -> str:
    """Write the CSV header plus one row per record; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow(r.csv_row())
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def read_records(text: str, source: str = "<records>") -> list[BenchRecord]:
    """Parse CSV written by :func:`write_records`; errors name the offending line."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or all(not r for r in rows):
        return []
    header = tuple(rows[0])
    if header != CSV_COLUMNS:
        raise RecordParseError(f"{source}:1: expected header {','.join(CSV_COLUMNS)}")
    out = []
    for lineno, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise RecordParseError(f"{source}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
        try:
            kw = {}
            for name, value in zip(CSV_COLUMNS, row):
                kind = _CASTS[name]
                kw[name] = int(value) if kind == "int" else float(value) if kind == "float" else value
            out.append(BenchRecord(**kw))
        except ValueError as exc:
            raise RecordParseError(f"{source}:{lineno}: {exc}") from exc
    return out


def bench_kernel(prepared, machine: MachineModel, warmup: int = 1, reps: int = 5) -> BenchRecord:
    """Time an already-validated prepared kernel and wrap the result in a record."""
    timing = time_runs(prepared.run, warmup, reps)
    n = prepared.nsites
    cfg = prepared.cfg
    return BenchRecord.build(
        prepared.name, prepared.scheme, cfg.vvl, cfg.backend, cfg.workers, reps, timing.min,
        prepared.cost.bytes(n), prepared.cost.flops(n), machine, timing.mean, timing.std,
    )


def bench_against_stream(prepared, warmup: int = 1, reps: int = 60, stream_sites: int | None = None,
                         seed: int = 0) -> tuple[MachineModel, BenchRecord]:
    """Benchmark ``prepared`` against a STREAM triad timed in alternation with it.

    Each repetition times one triad call and one kernel call, alternating
    which goes first, so slow drift in machine load (other tenants, frequency changes) affects both
    minima alike.  The triad uses its own arrays of ``stream_sites`` sites
    (default: 4x the last-level cache) and is validated first.  Returns the
    measured machine model (bandwidth only; peak is unknown and left
    effectively infinite) and the kernel's record against it.
    """
    if reps < 1 or warmup < 0:
        raise InvalidArgumentError("reps must be >= 1 and warmup >= 0")
    n = stream_sites if stream_sites is not None else default_stream_sites()
    stream = suite.prepare("triad", GridShape([n]), AOS, prepared.cfg, seed)
    check_triad(stream)
    for _ in range(warmup):
        stream.run()
        prepared.run()
    stream_samples, samples = [], []
    pair = [(stream.run, stream_samples), (prepared.run, samples)]
    for _ in range(reps):
        for fn, out in pair:
            t0 = time.perf_counter()
            fn()
            out.append(time.perf_counter() - t0)
        pair.reverse()  # ABBA order so neither side always runs second
    stream_bw = TRIAD_COST.bytes(n) / min(stream_samples)
    machine = MachineModel("measured", 1e18, stream_bw)
    timing = _timing(samples)
    cfg, nsites = prepared.cfg, prepared.nsites
    record = BenchRecord.build(
        prepared.name, prepared.scheme, cfg.vvl, cfg.backend, cfg.workers, reps, timing.min,
        prepared.cost.bytes(nsites), prepared.cost.flops(nsites), machine, timing.mean, timing.std,
    )
    return machine, record


def roofline_report(records, machines) -> str:
    """Text roofline report: one header block per machine, then one CSV row per record."""
    lines = []
    for m in machines:
        lines.append(
            f"# machine={m.name} peak_gflops={m.peak_flops / 1e9:g} stream_gbs={m.stream_bw / 1e9:g} "
            f"ridge_point={m.ridge_point:.1f}"
        )
    lines.append("machine,kernel,layout,vvl,backend,workers,oi,attainable_gflops,bound_class,pct_stream")
    for m in machines:
        for r in records:
            lines.append(",".join([
                m.name, r.kernel, r.layout, str(r.vvl), r.backend, str(r.workers),
                f"{r.oi:.3g}", f"{attainable_flops(r.oi, m) / 1e9:.4g}", classify(r.oi, m),
                f"{pct_of_stream(r.bandwidth, m.stream_bw):.1f}",
            ]))
    return "\n".join(lines) + "\n"


def ridge_table(machines=None) -> list[tuple[str, float]]:
    machines = machines if machines is not None else PRESETS.values()
    return [(m.name, round(m.ridge_point, 1)) for m in machines]

