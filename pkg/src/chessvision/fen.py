"""Placement-only FEN encoding and decoding.

Board squares are indexed 0..63 row-major from the top-left of the
rectified board (a8 = 0, h1 = 63 with White at the bottom). Only the
piece-placement field is handled: side to move, castling rights and
clocks are not part of this pipeline's output.
"""

from __future__ import annotations

from .pieces import PieceClass


class FenError(ValueError):
    """Malformed placement string; `offset` is the character position."""

    def __init__(self, message: str, offset: int = -1):
        super().__init__(message)
        self.offset = offset


def encode_fen(squares) -> str:
    """Encode 64 PieceClass values as a placement FEN string.

    Empty runs are collapsed into maximal digit runs ("8" for an empty
    rank, never "44").
    """
    squares = list(squares)
    if len(squares) != 64:
        raise ValueError(f"expected 64 squares, got {len(squares)}")
    ranks = []
    for r in range(8):
        block = ""
        run = 0
        for c in range(8):
            piece = squares[8 * r + c]
            if piece is PieceClass.EMPTY:
                run += 1
            else:
                if run:
                    block += str(run)
                    run = 0
                block += piece.letter
        if run:
            block += str(run)
        ranks.append(block)
    return "/".join(ranks)


def decode_fen(text: str, strict: bool = False, enforce_census: bool = False):
    """Decode a placement FEN string into 64 PieceClass values.

    Census invariants are not checked by default so that deliberately
    illegal fixture positions can round-trip; pass enforce_census=True to
    reject them. Non-maximal digit runs ("44" for an empty rank) are
    tolerated by default and rejected in strict mode, where only the
    canonical encoding is accepted.
    """
    squares = []
    rank = 0
    file = 0
    prev_digit = False
    for offset, ch in enumerate(text):
        if ch == "/":
            if file != 8:
                raise FenError(f"rank {rank} has {file} squares, expected 8", offset)
            rank += 1
            file = 0
            prev_digit = False
            if rank > 7:
                raise FenError("more than 8 ranks", offset)
        elif ch.isdigit():
            n = int(ch)
            if not 1 <= n <= 8:
                raise FenError(f"bad empty count {ch!r}", offset)
            if strict and prev_digit:
                raise FenError("non-maximal digit run", offset)
            file += n
            if file > 8:
                raise FenError(f"rank {rank} overflows 8 squares", offset)
            squares.extend([PieceClass.EMPTY] * n)
            prev_digit = True
        else:
            try:
                squares.append(PieceClass.from_letter(ch))
            except KeyError:
                raise FenError(f"bad character {ch!r}", offset) from None
            file += 1
            prev_digit = False
            if file > 8:
                raise FenError(f"rank {rank} overflows 8 squares", offset)
    if rank != 7 or file != 8:
        raise FenError(f"expected 8 ranks of 8 squares, ended at rank {rank}", len(text))
    if enforce_census:
        from .infer import PieceCensusLimits, census_violations

        violations = census_violations(squares, PieceCensusLimits())
        if violations:
            raise FenError("position violates piece census: " + "; ".join(violations))
    return squares
