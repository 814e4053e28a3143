"""Position inference from per-square probability vectors.

Converts 64 class-probability vectors into a coherent piece placement
using global chess constraints: the two kings are placed first, empty
squares next, and the rest of the board is filled greedily from
per-class probability-sorted lists, rejecting assignments that would
exceed per-piece census limits or put two same-color bishops on
same-colored squares.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .pieces import FILL_CLASSES, NUM_CLASSES, PieceClass


@dataclass(frozen=True)
class PieceCensusLimits:
    """Maximum per-color piece counts.

    The queen limit of 9 assumes any untracked promotion was to a queen;
    callers tracking game history can pass tighter limits instead.
    """

    pawn: int = 8
    knight: int = 2
    bishop: int = 2
    rook: int = 2
    queen: int = 9
    king: int = 1
    total_per_color: int = 16

    def limit_for(self, piece: PieceClass) -> int:
        return {
            PieceClass.WP: self.pawn, PieceClass.BP: self.pawn,
            PieceClass.WN: self.knight, PieceClass.BN: self.knight,
            PieceClass.WB: self.bishop, PieceClass.BB: self.bishop,
            PieceClass.WR: self.rook, PieceClass.BR: self.rook,
            PieceClass.WQ: self.queen, PieceClass.BQ: self.queen,
            PieceClass.WK: self.king, PieceClass.BK: self.king,
        }[piece]


def square_is_light(index: int) -> bool:
    """Square color under the fixed top-left = a8 orientation."""
    row, col = divmod(index, 8)
    return (row + col) % 2 == 0


def validate_probabilities(probs: np.ndarray) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (64, NUM_CLASSES):
        raise ValueError(f"expected (64, {NUM_CLASSES}) probabilities, got {probs.shape}")
    if not np.all(np.isfinite(probs)):
        raise ValueError("non-finite probability values")
    return probs


def census_violations(
    squares: Sequence[PieceClass], limits: PieceCensusLimits
) -> List[str]:
    """Human-readable list of census/bishop-rule violations (empty if legal)."""
    squares = list(squares)
    out = []
    for color in ("white", "black"):
        white = color == "white"
        mine = [
            (i, p) for i, p in enumerate(squares)
            if (p.is_white if white else p.is_black)
        ]
        kings = [i for i, p in mine if p in (PieceClass.WK, PieceClass.BK)]
        if len(kings) != 1:
            out.append(f"{color} has {len(kings)} kings")
        counts: dict[PieceClass, int] = {}
        for _, p in mine:
            counts[p] = counts.get(p, 0) + 1
        for p, n in counts.items():
            if n > limits.limit_for(p):
                out.append(f"{color} has {n} x {p.letter} (limit {limits.limit_for(p)})")
        if len(mine) > limits.total_per_color:
            out.append(f"{color} has {len(mine)} pieces (limit {limits.total_per_color})")
        bishops = [i for i, p in mine if p in (PieceClass.WB, PieceClass.BB)]
        if len(bishops) >= 2:
            colors = {square_is_light(i) for i in bishops}
            if len(colors) < len(bishops):
                out.append(f"{color} bishops share a square color")
    return out


def place_kings(probs: np.ndarray) -> Tuple[int, int]:
    """Squares for the white and black king.

    Each king goes to the square maximizing its class probability. On a
    collision the color losing less probability by moving to its
    second-best square yields; on an exact tie black yields.
    """
    probs = validate_probabilities(probs)
    wk = probs[:, PieceClass.WK]
    bk = probs[:, PieceClass.BK]
    w_best = int(np.argmax(wk))
    b_best = int(np.argmax(bk))
    if w_best != b_best:
        return w_best, b_best
    s = w_best
    w_second = int(np.argmax(np.where(np.arange(64) == s, -np.inf, wk)))
    b_second = int(np.argmax(np.where(np.arange(64) == s, -np.inf, bk)))
    w_loss = wk[s] - wk[w_second]
    b_loss = bk[s] - bk[b_second]
    if w_loss < b_loss:
        return w_second, s
    return s, b_second


def place_empties(
    probs: np.ndarray, board: List[Optional[PieceClass]]
) -> List[Optional[PieceClass]]:
    """Mark every unfilled square whose argmax class is EMPTY.

    Argmax ties break toward the lowest class ordinal, so a square tied
    between EMPTY (ordinal 12) and any piece stays unfilled here.
    """
    probs = validate_probabilities(probs)
    argmax = np.argmax(probs, axis=1)  # first (lowest-ordinal) max wins
    for i in range(64):
        if board[i] is None and argmax[i] == PieceClass.EMPTY:
            board[i] = PieceClass.EMPTY
    return board


def greedy_fill(
    probs: np.ndarray,
    board: List[Optional[PieceClass]],
    limits: PieceCensusLimits = PieceCensusLimits(),
) -> List[PieceClass]:
    """Fill the remaining squares in global probability order.

    Maintains one descending (probability, square) list per non-king,
    non-empty class plus a tops vector of current list heads. Each step
    takes the highest top; the candidate is assigned unless its square is
    already filled, its class census is exhausted, the bishop
    square-color rule would break, or its color already has 16 pieces.
    The losing class's cursor advances either way. If every list runs out
    first, leftover squares become empty.
    """
    probs = validate_probabilities(probs)
    unfilled = [i for i in range(64) if board[i] is None]
    to_fill = len(unfilled)
    if to_fill == 0:
        return [p for p in board]  # type: ignore[misc]

    unfilled_arr = np.array(unfilled)
    queues = {}
    cursors = {}
    for piece in FILL_CLASSES:
        col = probs[unfilled_arr, piece]
        order = np.argsort(-col, kind="stable")  # ties by square index
        queues[piece] = [(float(col[k]), int(unfilled_arr[k])) for k in order]
        cursors[piece] = 0

    counts = {piece: 0 for piece in FILL_CLASSES}
    white_total = sum(1 for p in board if p is not None and p.is_white)
    black_total = sum(1 for p in board if p is not None and p.is_black)
    bishop_colors = {True: set(), False: set()}  # is_white -> square colors used
    for i, p in enumerate(board):
        if p in (PieceClass.WB, PieceClass.BB):
            bishop_colors[p.is_white].add(square_is_light(i))

    while to_fill > 0:
        best_piece = None
        best_prob = -1.0
        for piece in FILL_CLASSES:  # tie goes to the lower ordinal
            q, c = queues[piece], cursors[piece]
            if c < len(q) and q[c][0] > best_prob:
                best_prob, best_piece = q[c][0], piece
        if best_piece is None:
            break
        prob, square = queues[best_piece][cursors[best_piece]]
        cursors[best_piece] += 1

        if board[square] is not None:
            continue
        if counts[best_piece] >= limits.limit_for(best_piece):
            continue
        white = best_piece.is_white
        total = white_total if white else black_total
        if total >= limits.total_per_color:
            continue
        if best_piece in (PieceClass.WB, PieceClass.BB):
            sq_color = square_is_light(square)
            if sq_color in bishop_colors[white]:
                continue
            bishop_colors[white].add(sq_color)

        board[square] = best_piece
        counts[best_piece] += 1
        if white:
            white_total += 1
        else:
            black_total += 1
        to_fill -= 1

    for i in range(64):
        if board[i] is None:
            board[i] = PieceClass.EMPTY
    return [p for p in board]  # type: ignore[misc]


def infer_position(
    probs: np.ndarray, limits: PieceCensusLimits = PieceCensusLimits()
) -> List[PieceClass]:
    """Kings, then empties, then constrained greedy fill."""
    probs = validate_probabilities(probs)
    board: List[Optional[PieceClass]] = [None] * 64
    w_sq, b_sq = place_kings(probs)
    board[w_sq] = PieceClass.WK
    board[b_sq] = PieceClass.BK
    board = place_empties(probs, board)
    return greedy_fill(probs, board, limits)


def argmax_position(probs: np.ndarray) -> List[PieceClass]:
    """Per-square argmax with no global constraints (the Top-1 baseline)."""
    probs = validate_probabilities(probs)
    return [PieceClass(int(k)) for k in np.argmax(probs, axis=1)]
