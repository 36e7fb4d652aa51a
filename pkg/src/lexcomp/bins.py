"""Categorical complexity bins over the continuous 0-1 score.

The five bins name the proportion of annotators that find a target complex:
few [0, 0.2), some [0.2, 0.4), half [0.4, 0.6), most [0.6, 0.8), all [0.8, 1].
Every interval is half-open except the last, which is closed so that a score
of exactly 1.0 is representable.
"""

from __future__ import annotations

from enum import Enum

__all__ = ["ComplexityBin", "bin_complexity", "BIN_ORDER"]


class ComplexityBin(str, Enum):
    FEW = "few"
    SOME = "some"
    HALF = "half"
    MOST = "most"
    ALL = "all"

    @property
    def ordinal(self) -> int:
        return BIN_ORDER.index(self)

    @property
    def midpoint(self) -> float:
        return 0.1 + 0.2 * self.ordinal


BIN_ORDER: tuple[ComplexityBin, ...] = (
    ComplexityBin.FEW,
    ComplexityBin.SOME,
    ComplexityBin.HALF,
    ComplexityBin.MOST,
    ComplexityBin.ALL,
)

_BOUNDARIES = (0.2, 0.4, 0.6, 0.8)


def bin_complexity(c: float) -> ComplexityBin:
    """Map a continuous complexity score in [0, 1] to its categorical bin.

    Boundary values belong to the upper bin (0.2 -> some); scores outside
    [0, 1] raise ValueError.
    """
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"complexity score {c!r} outside [0, 1]")
    for i, upper in enumerate(_BOUNDARIES):
        if c < upper:
            return BIN_ORDER[i]
    return ComplexityBin.ALL
