"""Reductions over target buffers.

The caller builds the array of per-site values (normally with a kernel) and
passes it here, mirroring the two-phase reduce design.

Deterministic summation uses a fixed tree that does not depend on the worker
count: the input is cut into blocks of :data:`BLOCK` elements, each block is
summed left to right, and the block partials are combined by repeatedly adding
adjacent pairs ``(p0+p1, p2+p3, ...)``; an odd trailing partial moves up a
level unchanged.
"""

from __future__ import annotations

import numpy as np

from .errors import BoundsError, InvalidArgumentError
from .execution import LaunchConfig, run_tasks
from .memspace import TargetBuffer

__all__ = ["BLOCK", "target_double_max", "target_double_min", "target_double_sum"]

BLOCK = 256


def _values(buf, n: int) -> np.ndarray:
    data = buf.data if isinstance(buf, TargetBuffer) else np.asarray(buf)
    if data.dtype != np.float64:
        raise InvalidArgumentError(f"double reductions need f64 data, got {data.dtype}")
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 0:
        raise InvalidArgumentError(f"element count must be a non-negative integer, got {n!r}")
    if n > data.size:
        raise BoundsError(f"reduction over {n} elements of a {data.size}-element buffer")
    return data[:n]


def _split(n: int, parts: int):
    parts = max(1, min(parts, n))
    bounds = [n * k // parts for k in range(parts + 1)]
    return [(bounds[k], bounds[k + 1]) for k in range(parts) if bounds[k] < bounds[k + 1]]


def _block_partials(x: np.ndarray) -> np.ndarray:
    """Left-to-right sum of every BLOCK-sized block (last block may be short)."""
    nfull = x.size // BLOCK
    out = []
    if nfull:
        blocks = x[: nfull * BLOCK].reshape(nfull, BLOCK)
        acc = blocks[:, 0].copy()
        for j in range(1, BLOCK):
            acc += blocks[:, j]
        out.append(acc)
    tail = x[nfull * BLOCK:]
    if tail.size:
        acc = tail[:1].copy()
        for j in range(1, tail.size):
            acc += tail[j]
        out.append(acc)
    return np.concatenate(out) if out else np.zeros(0)


def _pairwise_tree(partials: np.ndarray) -> float:
    p = partials
    while p.size > 1:
        even = p.size - p.size % 2
        nxt = p[0:even:2] + p[1:even:2]
        if p.size % 2:
            nxt = np.append(nxt, p[-1])
        p = nxt
    return float(p[0])


def target_double_sum(buf, n: int, cfg: LaunchConfig | None = None) -> float:
    """Sum of the first ``n`` elements of ``buf``.

    With ``cfg.deterministic`` the result is bitwise independent of backend
    and worker count.  Otherwise each worker sums a contiguous share with
    numpy and the shares are added in completion order.
    """
    cfg = cfg if cfg is not None else LaunchConfig()
    x = _values(buf, n)
    if n == 0:
        return 0.0
    if cfg.deterministic:
        nblocks = -(-n // BLOCK)
        # split on block boundaries so every worker produces whole-block partials
        ranges = [(a * BLOCK, min(b * BLOCK, n)) for a, b in _split(nblocks, cfg.workers)]
        parts = run_tasks(lambda r: _block_partials(x[r[0]:r[1]]), ranges, cfg)
        return _pairwise_tree(np.concatenate(parts))
    parts = run_tasks(lambda r: float(np.sum(x[r[0]:r[1]])), _split(n, cfg.workers), cfg)
    total = 0.0
    for p in parts:
        total += p
    return total


def _extremum(buf, n, cfg, reduce_fn, name):
    cfg = cfg if cfg is not None else LaunchConfig()
    x = _values(buf, n)
    if n == 0:
        raise InvalidArgumentError(f"{name} of zero elements")
    parts = run_tasks(lambda r: reduce_fn(x[r[0]:r[1]]), _split(n, cfg.workers), cfg)
    return float(reduce_fn(np.array(parts)))


def target_double_min(buf, n: int, cfg: LaunchConfig | None = None) -> float:
    """Exact minimum of the first ``n`` elements. -0.0 and +0.0 compare equal; either may come back."""
    return _extremum(buf, n, cfg, np.min, "min")


def target_double_max(buf, n: int, cfg: LaunchConfig | None = None) -> float:
    return _extremum(buf, n, cfg, np.max, "max")
