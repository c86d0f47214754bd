from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..errors import InvalidArgumentError

WORD_BYTES = 8


@dataclass(frozen=True)
class KernelCostModel:
    """Analytic per-site traffic of a kernel.

    Every element a kernel logically reads or writes is counted once at
    8 bytes; caches are not modelled.
    """

    name: str
    flops_per_site: int
    bytes_per_site: int

    def __post_init__(self):
        if self.flops_per_site < 0 or self.bytes_per_site <= 0:
            raise InvalidArgumentError("cost model needs flops >= 0 and bytes > 0")

    @classmethod
    def from_words(cls, name, flops, reads, writes):
        return cls(name, flops, WORD_BYTES * (reads + writes))

    @property
    def oi_exact(self) -> Fraction:
        return Fraction(self.flops_per_site, self.bytes_per_site)

    @property
    def oi(self) -> float:
        return self.flops_per_site / self.bytes_per_site

    @property
    def oi_3sf(self) -> str:
        return f"{self.oi:.3g}"

    def flops(self, nsites: int) -> int:
        return self.flops_per_site * nsites

    def bytes(self, nsites: int) -> int:
        return self.bytes_per_site * nsites
