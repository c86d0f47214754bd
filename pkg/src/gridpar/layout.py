"""Memory layouts for multi-valued grid fields.

A field stores ``ncomponents`` values at each of ``nsites`` grid sites in one
flat array.  The layout decides where value ``(comp, site)`` lives.  All three
schemes are served by the single AoSoA map::

    (site // sal) * ncomponents * sal + comp * sal + site % sal

with ``sal == 1`` giving AoS (``|rgb|rgb|...``) and ``sal == nsites_padded``
giving SoA (``|rrrr|gggg|bbbb|``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, InvalidArgumentError

__all__ = [
    "AOS",
    "SOA",
    "AoSoA",
    "GridShape",
    "LayoutDescriptor",
    "LayoutScheme",
    "coords_of",
    "index",
    "make_layout",
    "parse_scheme",
    "parse_scheme_list",
    "site_of",
]


@dataclass(frozen=True)
class LayoutScheme:
    kind: str
    sal: int | None = None

    def __post_init__(self):
        if self.kind not in ("aos", "soa", "aosoa"):
            raise InvalidArgumentError(f"unknown layout kind {self.kind!r}")
        if self.kind == "aosoa":
            if not isinstance(self.sal, (int, np.integer)) or self.sal < 1:
                raise InvalidArgumentError(f"AoSoA short-array length must be >= 1, got {self.sal!r}")
        elif self.sal is not None:
            raise InvalidArgumentError(f"{self.kind} takes no short-array length")

    def __str__(self):
        return f"aosoa:{self.sal}" if self.kind == "aosoa" else self.kind


AOS = LayoutScheme("aos")
SOA = LayoutScheme("soa")


def AoSoA(sal: int) -> LayoutScheme:
    return LayoutScheme("aosoa", sal)


_SCHEME_RE = re.compile(r"^(aos|soa|aosoa:([0-9]+))$")


def parse_scheme(text: str) -> LayoutScheme:
    """Parse ``aos``, ``soa`` or ``aosoa:<sal>`` (lowercase, decimal sal)."""
    m = _SCHEME_RE.match(text)
    if m is None:
        raise InvalidArgumentError(f"invalid layout {text!r}; expected aos, soa or aosoa:<sal>")
    if m.group(2) is not None:
        return AoSoA(int(m.group(2)))
    return AOS if m.group(1) == "aos" else SOA


def parse_scheme_list(text: str) -> list[LayoutScheme]:
    return [parse_scheme(part) for part in text.split(",")]


def _check_count(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise InvalidArgumentError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class LayoutDescriptor:
    """Resolved layout of one field: extents plus short-array length."""

    nsites_logical: int
    nsites_padded: int
    ncomponents: int
    sal: int
    scheme: LayoutScheme = field(default=AOS, compare=False)

    def __post_init__(self):
        for name in ("nsites_logical", "nsites_padded", "ncomponents", "sal"):
            _check_count(name, getattr(self, name))
        if self.nsites_padded < self.nsites_logical:
            raise InvalidArgumentError("nsites_padded must be >= nsites_logical")
        if self.sal > self.nsites_padded or self.nsites_padded % self.sal:
            raise InvalidArgumentError(
                f"nsites_padded={self.nsites_padded} is not a multiple of sal={self.sal}"
            )

    @property
    def total(self) -> int:
        return self.nsites_padded * self.ncomponents

    @property
    def is_aos(self) -> bool:
        return self.sal == 1

    @property
    def is_soa(self) -> bool:
        return self.sal == self.nsites_padded

    def index(self, comp: int, site: int) -> int:
        if not 0 <= comp < self.ncomponents:
            raise BoundsError(f"component {comp} outside [0, {self.ncomponents})")
        if not 0 <= site < self.nsites_padded:
            raise BoundsError(f"site {site} outside [0, {self.nsites_padded})")
        sal = self.sal
        return (site // sal) * self.ncomponents * sal + comp * sal + site % sal

    def indices(self, comp, sites, check: bool = True) -> np.ndarray:
        """Vectorised :meth:`index` over arrays of components and/or sites."""
        comp = np.asarray(comp, dtype=np.int64)
        sites = np.asarray(sites, dtype=np.int64)
        if check:
            if comp.size and (comp.min() < 0 or comp.max() >= self.ncomponents):
                raise BoundsError(f"component outside [0, {self.ncomponents})")
            if sites.size and (sites.min() < 0 or sites.max() >= self.nsites_padded):
                raise BoundsError(f"site outside [0, {self.nsites_padded})")
        sal = self.sal
        return (sites // sal) * (self.ncomponents * sal) + comp * sal + sites % sal

    def pack(self, logical, out: np.ndarray | None = None, dtype=np.float64) -> np.ndarray:
        """Scatter a ``(ncomponents, nsites_logical)`` array into layout order."""
        logical = np.asarray(logical)
        if logical.shape != (self.ncomponents, self.nsites_logical):
            raise InvalidArgumentError(
                f"expected shape {(self.ncomponents, self.nsites_logical)}, got {logical.shape}"
            )
        if out is None:
            out = np.zeros(self.total, dtype=dtype)
        elif out.shape != (self.total,):
            raise InvalidArgumentError(f"output must have {self.total} elements")
        out[self._logical_map()] = logical
        return out

    def unpack(self, flat: np.ndarray) -> np.ndarray:
        """Gather the logical ``(ncomponents, nsites_logical)`` view of a flat array."""
        flat = np.asarray(flat)
        if flat.shape != (self.total,):
            raise InvalidArgumentError(f"expected {self.total} elements, got shape {flat.shape}")
        return flat[self._logical_map()]

    def _logical_map(self) -> np.ndarray:
        comps = np.arange(self.ncomponents)[:, None]
        sites = np.arange(self.nsites_logical)[None, :]
        return self.indices(comps, sites, check=False)

    def padding_indices(self) -> np.ndarray:
        """Flat offsets of every padded (non-logical) element."""
        comps = np.arange(self.ncomponents)[:, None]
        sites = np.arange(self.nsites_logical, self.nsites_padded)[None, :]
        return self.indices(comps, sites, check=False).ravel()


def make_layout(nsites: int, ncomponents: int, scheme: LayoutScheme = AOS, vvl: int = 1) -> LayoutDescriptor:
    """Resolve a scheme into a descriptor, padding sites to a multiple of lcm(sal, vvl)."""
    _check_count("nsites", nsites)
    _check_count("ncomponents", ncomponents)
    _check_count("vvl", vvl)
    if isinstance(scheme, str):
        scheme = parse_scheme(scheme)
    if scheme.kind == "soa":
        padded = -(-nsites // vvl) * vvl
        sal = padded
    else:
        sal = 1 if scheme.kind == "aos" else int(scheme.sal)
        quantum = math.lcm(sal, vvl)
        padded = -(-nsites // quantum) * quantum
    return LayoutDescriptor(int(nsites), int(padded), int(ncomponents), int(sal), scheme)


def index(layout: LayoutDescriptor, comp: int, site: int) -> int:
    return layout.index(comp, site)


@dataclass(frozen=True)
class GridShape:
    """Extents of a structured lattice; dimension 0 varies fastest."""

    dims: tuple[int, ...]

    def __init__(self, dims):
        dims = tuple(int(d) for d in dims)
        if not dims:
            raise InvalidArgumentError("a grid needs at least one dimension")
        for d in dims:
            _check_count("grid extent", d)
        object.__setattr__(self, "dims", dims)

    @property
    def nsites(self) -> int:
        return math.prod(self.dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def strides(self) -> tuple[int, ...]:
        out, acc = [], 1
        for d in self.dims:
            out.append(acc)
            acc *= d
        return tuple(out)

    def site_of(self, coords) -> int:
        coords = tuple(coords)
        if len(coords) != self.ndim:
            raise InvalidArgumentError(f"expected {self.ndim} coordinates, got {len(coords)}")
        for c, d in zip(coords, self.dims):
            if not 0 <= c < d:
                raise BoundsError(f"coordinate {c} outside [0, {d})")
        return sum(c * s for c, s in zip(coords, self.strides))

    def coords_of(self, site: int) -> tuple[int, ...]:
        if not 0 <= site < self.nsites:
            raise BoundsError(f"site {site} outside [0, {self.nsites})")
        out = []
        for d in self.dims:
            site, c = divmod(site, d)
            out.append(c)
        return tuple(out)

    def coords_of_sites(self, sites) -> tuple[np.ndarray, ...]:
        """Vectorised :meth:`coords_of`; no bounds check."""
        rest = np.asarray(sites, dtype=np.int64)
        out = []
        for d in self.dims:
            rest, c = np.divmod(rest, d)
            out.append(c)
        return tuple(out)

    def sites_of_coords(self, coords) -> np.ndarray:
        """Vectorised :meth:`site_of`; coordinates are wrapped periodically."""
        total = 0
        for c, d, s in zip(coords, self.dims, self.strides):
            total = total + (np.asarray(c, dtype=np.int64) % d) * s
        return total

    def __str__(self):
        return ",".join(str(d) for d in self.dims)


def site_of(shape: GridShape, coords) -> int:
    return shape.site_of(coords)


def coords_of(shape: GridShape, site: int) -> tuple[int, ...]:
    return shape.coords_of(site)
