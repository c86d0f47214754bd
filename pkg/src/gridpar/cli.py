"""Command-line front end: ``bench``, ``sweep``, ``lb`` and ``roofline``.

Exit codes: 0 success, 1 correctness or conservation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import itertools
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bench
from .errors import GridparError, NumericalDomainError
from .execution import LaunchConfig, default_workers
from .kernels import suite
from .kernels.lb import Diagnostics, run_lb_miniapp
from .layout import AOS, GridShape, LayoutScheme, parse_scheme

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MASS_DRIFT_LIMIT = 1e-10


class UsageError(Exception):
    pass


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


def _int_list(text):
    return [_positive_int(t) for t in text.split(",")]


def _grid(text):
    dims = _int_list(text)
    return GridShape(dims)


def _layouts(text):
    try:
        return [parse_scheme(t) for t in text.split(",")]
    except GridparError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _backends(text):
    out = []
    for t in text.split(","):
        if t not in ("serial", "threads"):
            raise argparse.ArgumentTypeError(f"unknown backend {t!r}; use serial or threads")
        out.append(t)
    return out


def _kernels(text):
    names = text.split(",")
    for n in names:
        if n not in suite.KERNELS:
            raise argparse.ArgumentTypeError(f"unknown kernel {n!r}; choose from {','.join(suite.KERNELS)}")
    return names


def _tau(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0.5:
        raise argparse.ArgumentTypeError("tau must exceed 0.5")
    return value


@dataclass
class RunPlan:
    """Everything a subcommand needs; sweep axes are expanded as a cartesian product."""

    subcommand: str
    grid: GridShape = field(default_factory=lambda: GridShape([64, 64]))
    steps: int = 0
    tau: float = 0.8
    kernels: list = field(default_factory=lambda: list(suite.KERNELS))
    layouts: list = field(default_factory=lambda: [AOS])
    vvls: list = field(default_factory=lambda: [1])
    backends: list = field(default_factory=lambda: ["serial"])
    workers: list = field(default_factory=lambda: [default_workers()])
    machines: list = field(default_factory=list)
    output: str | None = None
    seed: int = 0
    deterministic: bool = False
    reps: int = 5
    warmup: int = 1

    def configs(self):
        """Yield ``(layout, LaunchConfig)`` for every point of the sweep."""
        for layout, vvl, backend in itertools.product(self.layouts, self.vvls, self.backends):
            counts = [1] if backend == "serial" else self.workers
            for n in counts:
                yield layout, LaunchConfig(backend, n, vvl, self.deterministic)


def resolve_machine(source: str, stream_sites=None, reps=10) -> bench.MachineModel:
    """``preset:<name>``, ``file:<path>`` or ``measure``."""
    kind, _, arg = source.partition(":")
    if kind == "preset":
        try:
            return bench.PRESETS[arg]
        except KeyError:
            raise UsageError(f"unknown preset {arg!r}; choose from {', '.join(bench.PRESETS)}")
    if kind == "file":
        try:
            return bench.MachineModel.from_file(arg)
        except (OSError, GridparError) as exc:
            raise UsageError(f"cannot read machine file: {exc}")
    if source == "measure":
        bw = bench.stream_triad_bandwidth(stream_sites, reps=reps)
        # no portable way to read peak flops; keep the roofline flat so only bandwidth matters
        return bench.MachineModel("measured", float("1e18"), bw)
    raise UsageError(f"invalid --machine {source!r}; use preset:<name>, file:<path> or measure")


def _open_output(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _diff_report(name, layout, cfg, expected, got) -> str:
    lines = [f"correctness mismatch: kernel={name} layout={layout} vvl={cfg.vvl} "
             f"backend={cfg.backend} workers={cfg.workers}"]
    for k, (e, g) in enumerate(zip(expected, got)):
        bad = np.argwhere(~((e == g) | (np.isnan(e) & np.isnan(g))))
        lines.append(f"  output {k}: {len(bad)} of {e.size} elements differ")
        for comp, site in bad[:5]:
            lines.append(f"    comp={comp} site={site} expected={e[comp, site]!r} got={g[comp, site]!r}")
    return "\n".join(lines)


def _same(expected, got) -> bool:
    return all(np.array_equal(e, g) for e, g in zip(expected, got))


def check_point(name, plan: RunPlan, layout, cfg, oracle):
    prepared = suite.prepare(name, plan.grid, layout, cfg, plan.seed)
    prepared.run()
    got = prepared.outputs()
    return _same(oracle, got), got


def oracle_outputs(name, plan: RunPlan):
    prepared = suite.prepare(name, plan.grid, AOS, LaunchConfig("serial", 1, 1, True), plan.seed)
    prepared.run()
    return prepared.outputs()


def cmd_bench(plan: RunPlan, stream_sites=None) -> int:
    machine = plan.machines[0] if plan.machines else resolve_machine("measure", stream_sites)
    records = []
    for name in plan.kernels:
        oracle = oracle_outputs(name, plan)
        for layout, cfg in plan.configs():
            ok, got = check_point(name, plan, layout, cfg, oracle)
            if not ok:
                print(_diff_report(name, layout, cfg, oracle, got), file=sys.stderr)
                return EXIT_FAIL
            prepared = suite.prepare(name, plan.grid, layout, cfg, plan.seed, scale_a=1.0)
            records.append(bench.bench_kernel(prepared, machine, plan.warmup, plan.reps))
    out, close = _open_output(plan.output)
    try:
        bench.write_records(records, out)
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_sweep(plan: RunPlan) -> int:
    """Correctness-only sweep: every configuration against the serial/aos/vvl=1 oracle."""
    status = EXIT_OK
    out, close = _open_output(plan.output)
    try:
        out.write("kernel,layout,vvl,backend,workers,status\n")
        for name in plan.kernels:
            oracle = oracle_outputs(name, plan)
            for layout, cfg in plan.configs():
                ok, got = check_point(name, plan, layout, cfg, oracle)
                out.write(f"{name},{layout},{cfg.vvl},{cfg.backend},{cfg.workers},{'ok' if ok else 'MISMATCH'}\n")
                if not ok:
                    print(_diff_report(name, layout, cfg, oracle, got), file=sys.stderr)
                    status = EXIT_FAIL
    finally:
        if close:
            out.close()
    return status


def cmd_lb(plan: RunPlan, dump: str | None = None) -> int:
    layout = plan.layouts[0]
    cfg = LaunchConfig(plan.backends[0], plan.workers[0], plan.vvls[0], plan.deterministic)
    try:
        state, diags = run_lb_miniapp(plan.grid, plan.tau, plan.steps, cfg, layout, seed=plan.seed)
    except NumericalDomainError as exc:
        print(f"lb: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out, close = _open_output(plan.output)
    try:
        out.write(Diagnostics.CSV_HEADER + "\n")
        for d in diags:
            out.write(d.csv_row() + "\n")
    finally:
        if close:
            out.close()
    if dump:
        np.save(dump, state.populations())
    m0, m1 = diags[0].total_mass, diags[-1].total_mass
    drift = abs(m1 - m0) / abs(m0)
    if drift > MASS_DRIFT_LIMIT:
        print(f"lb: relative mass drift {drift:.3e} exceeds {MASS_DRIFT_LIMIT:g}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_roofline(plan: RunPlan, records_path: str | None) -> int:
    records = []
    if records_path:
        try:
            text = Path(records_path).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read records: {exc}")
        try:
            records = bench.read_records(text, records_path)
        except GridparError as exc:
            raise UsageError(str(exc))
    machines = plan.machines or list(bench.PRESETS.values())
    out, close = _open_output(plan.output)
    try:
        out.write(bench.roofline_report(records, machines))
    finally:
        if close:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridpar", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, sweep_axes=True):
        p.add_argument("--grid", type=_grid, default=GridShape([64, 64]), help="grid extents X,Y")
        p.add_argument("--layout", type=_layouts, default=[AOS], help="aos, soa, aosoa:<sal> (comma list)")
        p.add_argument("--vvl", type=_int_list, default=[1], help="virtual vector lengths (comma list)")
        p.add_argument("--backend", type=_backends, default=["serial"], help="serial|threads (comma list)")
        p.add_argument("--threads", type=_int_list, default=[default_workers()], help="worker counts")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--deterministic", action="store_true", help="fixed chunk-to-worker assignment")
        p.add_argument("--csv", dest="output", help="output path (default stdout)")

    p = sub.add_parser("bench", help="validate then time suite kernels across configurations")
    common(p)
    p.add_argument("--kernel", type=_kernels, default=list(suite.KERNELS))
    p.add_argument("--machine", default="measure", help="preset:<name>, file:<path> or measure")
    p.add_argument("--reps", type=_positive_int, default=5)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--stream-sites", type=_positive_int, default=None, help="triad size for --machine measure")

    p = sub.add_parser("sweep", help="check every configuration against the serial/aos/vvl=1 oracle")
    common(p)
    p.add_argument("--kernel", type=_kernels, default=list(suite.KERNELS))

    p = sub.add_parser("lb", help="run the D2Q9 mini-app and write per-step diagnostics")
    common(p)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--tau", type=_tau, default=0.8)
    p.add_argument("--dump", help="save final populations (9 x nsites) as .npy")

    p = sub.add_parser("roofline", help="roofline report from a bench CSV")
    p.add_argument("--records", help="CSV written by 'gridpar bench'")
    p.add_argument("--machine", action="append", default=None,
                   help="preset:<name>, file:<path> or measure; repeatable (default: all presets)")
    p.add_argument("--csv", dest="output", help="output path (default stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    plan = RunPlan(args.subcommand, output=args.output)
    for name in ("grid", "seed", "deterministic", "steps", "tau", "reps", "warmup"):
        if hasattr(args, name):
            setattr(plan, name, getattr(args, name))
    for attr, name in (("layouts", "layout"), ("vvls", "vvl"), ("backends", "backend"),
                       ("workers", "threads"), ("kernels", "kernel")):
        if hasattr(args, name):
            setattr(plan, attr, getattr(args, name))
    if getattr(args, "steps", 0) < 0:
        parser.error("--steps must be >= 0")
    try:
        if args.subcommand == "roofline":
            plan.machines = [resolve_machine(m) for m in (args.machine or [])]
            return cmd_roofline(plan, args.records)
        if args.subcommand == "bench":
            plan.machines = [resolve_machine(args.machine, args.stream_sites)]
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                status = cmd_bench(plan, args.stream_sites)
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            return status
        if args.subcommand == "sweep":
            return cmd_sweep(plan)
        if args.subcommand == "lb":
            return cmd_lb(plan, args.dump)
    except UsageError as exc:
        parser.error(str(exc))
    except GridparError as exc:
        print(f"gridpar: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
