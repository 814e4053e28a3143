"""The 13 square classes and their FEN letters.

The ordinal order below is the vector layout used everywhere a 13-way
probability vector appears (classifier outputs, probability files).
"""

from __future__ import annotations

from enum import IntEnum


class PieceClass(IntEnum):
    """One of the 13 labels a board square can take."""

    WK = 0
    WQ = 1
    WR = 2
    WB = 3
    WN = 4
    WP = 5
    BK = 6
    BQ = 7
    BR = 8
    BB = 9
    BN = 10
    BP = 11
    EMPTY = 12

    @property
    def letter(self) -> str:
        return _LETTERS[self.value]

    @property
    def is_white(self) -> bool:
        return self.value < 6

    @property
    def is_black(self) -> bool:
        return 6 <= self.value < 12

    @property
    def is_piece(self) -> bool:
        return self is not PieceClass.EMPTY

    @classmethod
    def from_letter(cls, ch: str) -> "PieceClass":
        return cls(_LETTERS.index(ch)) if ch in _LETTERS else cls._missing_letter(ch)

    @staticmethod
    def _missing_letter(ch: str) -> "PieceClass":
        raise KeyError(f"no piece class for {ch!r}")


_LETTERS = "KQRBNPkqrbnp_"

NUM_CLASSES = 13

#: The ten classes assigned by the greedy fill (everything but kings and empty).
FILL_CLASSES = (
    PieceClass.WQ,
    PieceClass.WR,
    PieceClass.WB,
    PieceClass.WN,
    PieceClass.WP,
    PieceClass.BQ,
    PieceClass.BR,
    PieceClass.BB,
    PieceClass.BN,
    PieceClass.BP,
)
