"""Host/target memory discipline.

Host and target copies of every field are always physically distinct numpy
arrays, even though both live in the same RAM.  Data only moves between them
through the explicit copy functions, which keeps the transfer discipline
testable on machines without a separate device.
"""

from __future__ import annotations

import threading
from enum import Enum
from types import MappingProxyType

import numpy as np

from .errors import (
    BoundsError,
    ContractViolation,
    FreedBufferError,
    InvalidArgumentError,
    ResourceError,
)
from .layout import LayoutDescriptor

__all__ = [
    "ConstantTable",
    "Coherence",
    "FieldPair",
    "TargetBuffer",
    "copy_const_to_target",
    "copy_from_target",
    "copy_subset_from_target",
    "copy_subset_to_target",
    "copy_to_target",
    "target_calloc",
    "target_free",
    "target_malloc",
]

DTYPES = {
    "f64": np.dtype(np.float64),
    "i32": np.dtype(np.int32),
    "i64": np.dtype(np.int64),
}

# Signaling-NaN bit pattern written into fresh float buffers, so reads of
# uninitialised or padded elements show up in results instead of passing silently.
POISON_F64 = np.array([0x7FF4DEADBEEF0000], dtype=np.uint64).view(np.float64)[0]
POISON_INT = {np.dtype(np.int32): np.int32(-0x21524111), np.dtype(np.int64): np.int64(-0x2152411021524111)}


def _resolve_dtype(dtype) -> np.dtype:
    if isinstance(dtype, str) and dtype in DTYPES:
        return DTYPES[dtype]
    try:
        dt = np.dtype(dtype)
    except TypeError as exc:
        raise InvalidArgumentError(f"unsupported element type {dtype!r}") from exc
    if dt not in DTYPES.values():
        raise InvalidArgumentError(f"unsupported element type {dtype!r}; use f64, i32 or i64")
    return dt


class TargetBuffer:
    """Storage in the target memory space.

    ``data`` is only meant to be touched by copy routines and by kernels
    through :class:`gridpar.execution.FieldView`.
    """

    def __init__(self, count: int, dtype="f64", layout: LayoutDescriptor | None = None, zero: bool = False):
        if isinstance(count, bool) or not isinstance(count, (int, np.integer)) or count < 1:
            raise InvalidArgumentError(f"buffer element count must be >= 1, got {count!r}")
        if layout is not None and layout.total != count:
            raise InvalidArgumentError(f"layout needs {layout.total} elements, buffer has {count}")
        self.dtype = _resolve_dtype(dtype)
        self.count = int(count)
        self.layout = layout
        try:
            if zero:
                self._data = np.zeros(self.count, dtype=self.dtype)
            else:
                poison = POISON_F64 if self.dtype.kind == "f" else POISON_INT[self.dtype]
                self._data = np.full(self.count, poison, dtype=self.dtype)
        except MemoryError as exc:
            raise ResourceError(f"cannot allocate {self.count} x {self.dtype} on target") from exc

    @property
    def freed(self) -> bool:
        return self._data is None

    @property
    def data(self) -> np.ndarray:
        if self._data is None:
            raise FreedBufferError("target buffer used after target_free")
        return self._data

    def free(self):
        if self._data is None:
            raise FreedBufferError("target buffer freed twice")
        self._data = None

    def __len__(self):
        return self.count

    def __repr__(self):
        state = "freed" if self.freed else f"{self.count} x {self.dtype}"
        return f"<TargetBuffer {state}>"


def target_malloc(count: int, dtype="f64", layout: LayoutDescriptor | None = None) -> TargetBuffer:
    return TargetBuffer(count, dtype, layout)


def target_calloc(count: int, dtype="f64", layout: LayoutDescriptor | None = None) -> TargetBuffer:
    return TargetBuffer(count, dtype, layout, zero=True)


def target_free(buf: TargetBuffer):
    buf.free()


class Coherence(Enum):
    COHERENT = "coherent"
    HOST_DIRTY = "host-dirty"
    TARGET_DIRTY = "target-dirty"


class FieldPair:
    """Host and target copies of one multi-valued grid field."""

    def __init__(self, layout: LayoutDescriptor, dtype="f64", zero: bool = False):
        self.layout = layout
        self.target = TargetBuffer(layout.total, dtype, layout, zero=zero)
        self.host = np.zeros(layout.total, dtype=self.target.dtype)
        # host starts as the authoritative copy
        self.coherence = Coherence.HOST_DIRTY

    @classmethod
    def from_logical(cls, layout: LayoutDescriptor, values, dtype="f64") -> "FieldPair":
        pair = cls(layout, dtype)
        layout.pack(values, out=pair.host)
        return pair

    @property
    def dtype(self):
        return self.target.dtype

    def logical(self) -> np.ndarray:
        """Host copy as a ``(ncomponents, nsites_logical)`` array."""
        return self.layout.unpack(self.host)

    def set_logical(self, values):
        self.layout.pack(values, out=self.host)
        self.coherence = Coherence.HOST_DIRTY

    def mark_host_dirty(self):
        self.coherence = Coherence.HOST_DIRTY

    def mark_target_dirty(self):
        self.coherence = Coherence.TARGET_DIRTY

    def free(self):
        self.target.free()

    def __repr__(self):
        return f"<FieldPair {self.layout.ncomponents}x{self.layout.nsites_logical} {self.layout.scheme} {self.coherence.value}>"


def _check_same(dst: np.ndarray, src: np.ndarray):
    if dst.dtype != src.dtype:
        raise InvalidArgumentError(f"element type mismatch: {dst.dtype} vs {src.dtype}")
    if dst.shape != src.shape:
        raise InvalidArgumentError(f"element count mismatch: {dst.size} vs {src.size}")


def copy_to_target(dst, src=None):
    """Copy host data to the target.

    Accepts either a :class:`FieldPair` or ``(target_buffer, host_array)`` in
    the same order as ``copyToTarget(t_field, field, ...)``.
    """
    if isinstance(dst, FieldPair):
        if src is not None:
            raise InvalidArgumentError("copy_to_target(pair) takes no source")
        copy_to_target(dst.target, dst.host)
        dst.coherence = Coherence.COHERENT
        return
    if not isinstance(dst, TargetBuffer):
        raise InvalidArgumentError("destination must be a TargetBuffer or FieldPair")
    src = np.asarray(src)
    _check_same(dst.data, src.reshape(-1) if src.ndim != 1 else src)
    np.copyto(dst.data, src.reshape(-1))


def copy_from_target(dst, src=None):
    """Copy target data back to the host; ``(host_array, target_buffer)`` or a pair."""
    if isinstance(dst, FieldPair):
        if src is not None:
            raise InvalidArgumentError("copy_from_target(pair) takes no source")
        copy_from_target(dst.host, dst.target)
        dst.coherence = Coherence.COHERENT
        return
    if not isinstance(src, TargetBuffer):
        raise InvalidArgumentError("source must be a TargetBuffer")
    if not isinstance(dst, np.ndarray):
        raise InvalidArgumentError("destination must be a numpy array")
    _check_same(dst, src.data)
    np.copyto(dst, src.data)


def _subset_offsets(pair: FieldPair, sites) -> np.ndarray:
    sites = np.asarray(sites, dtype=np.int64).reshape(-1)
    if sites.size == 0:
        return sites
    if sites.min() < 0 or sites.max() >= pair.layout.nsites_logical:
        raise BoundsError(f"subset site outside [0, {pair.layout.nsites_logical})")
    if np.unique(sites).size != sites.size:
        raise InvalidArgumentError("subset site list contains duplicates")
    comps = np.arange(pair.layout.ncomponents)[:, None]
    return pair.layout.indices(comps, sites[None, :], check=False).ravel()


def copy_subset_to_target(pair: FieldPair, sites):
    """Copy every component of the listed sites host -> target; nothing else moves."""
    offsets = _subset_offsets(pair, sites)
    pair.target.data[offsets] = pair.host[offsets]


def copy_subset_from_target(pair: FieldPair, sites):
    offsets = _subset_offsets(pair, sites)
    pair.host[offsets] = pair.target.data[offsets]


class ConstantTable:
    """Named double-precision constants, read-only to kernels."""

    def __init__(self, **values):
        self._values = {}
        self._lock = threading.Lock()
        self._in_flight = 0
        for name, value in values.items():
            self.set(name, value)

    def set(self, name: str, value: float):
        with self._lock:
            if self._in_flight:
                raise ContractViolation(f"constant {name!r} written while a launch is in flight")
            self._values[name] = float(value)

    def __getitem__(self, name):
        return self._values[name]

    def __contains__(self, name):
        return name in self._values

    def get(self, name, default=None):
        return self._values.get(name, default)

    def snapshot(self):
        return MappingProxyType(dict(self._values))

    def _enter_launch(self):
        with self._lock:
            self._in_flight += 1

    def _exit_launch(self):
        with self._lock:
            self._in_flight -= 1

    def __repr__(self):
        return f"ConstantTable({self._values!r})"


def copy_const_to_target(table: ConstantTable, name: str, value: float):
    table.set(name, value)
