"""Synthetic chessboard renderer with exact ground truth.

Renders a canonical board (squares, simple piece silhouettes) and warps
it under a known perspective homography, returning the image together
with the true corner locations, lattice points and per-square labels.
Used as the independent oracle for detection and classification tests
and for generating demo fixtures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import cv2
import numpy as np

from .board import UNIT_CORNERS
from .geometry import Homography, Point2, homography_from_quad
from .pieces import PieceClass


@dataclass
class BoardStyle:
    """Rendering intensities and piece geometry scale (8-bit grayscale)."""

    light: int = 172
    dark: int = 84
    background: int = 228
    white_fill: int = 242
    black_fill: int = 14
    outline: int = 52
    black_outline: int = 196
    piece_scale: float = 1.0
    square_px: int = 60
    margin_px: int = 60

    @staticmethod
    def random(rng: np.random.Generator) -> "BoardStyle":
        return BoardStyle(
            light=int(rng.integers(160, 190)),
            dark=int(rng.integers(70, 100)),
            background=int(rng.integers(210, 240)),
            white_fill=int(rng.integers(232, 246)),
            black_fill=int(rng.integers(8, 26)),
            piece_scale=float(rng.uniform(0.9, 1.1)),
        )


@dataclass
class RenderedBoard:
    """A rendered image plus its ground truth."""

    image: np.ndarray
    corners: List[Point2]  # clockwise from the a8 board corner
    rectify: Homography  # image coords -> unit board square
    labels: List[PieceClass]

    def lattice_points(self) -> List[Point2]:
        """The 49 interior lattice points, row-major."""
        inv = self.rectify.inverse()
        pts = [(j / 8.0, i / 8.0) for i in range(1, 8) for j in range(1, 8)]
        mapped = inv.apply_many(np.array(pts))
        return [Point2(float(x), float(y)) for x, y in mapped]


def _draw_piece(canvas: np.ndarray, piece: PieceClass, x0: int, y0: int,
                s: int, style: BoardStyle) -> None:
    fill = style.white_fill if piece.is_white else style.black_fill
    edge = style.outline if piece.is_white else style.black_outline
    k = style.piece_scale

    def pt(u, v):
        return (int(x0 + (0.5 + (u - 0.5) * k) * s), int(y0 + (0.5 + (v - 0.5) * k) * s))

    def rect(u0, v0, u1, v1, color):
        cv2.rectangle(canvas, pt(u0, v0), pt(u1, v1), color, -1)

    def circle(u, v, r, color):
        cv2.circle(canvas, pt(u, v), int(r * k * s), color, -1)

    def poly(points, color):
        cv2.fillPoly(canvas, [np.array([pt(u, v) for u, v in points], np.int32)], color)

    base = piece.letter.upper()
    # Thin contour first, then the fill slightly inside it.
    if base == "P":
        circle(0.5, 0.44, 0.155, edge)
        poly([(0.32, 0.76), (0.68, 0.76), (0.60, 0.56), (0.40, 0.56)], edge)
        circle(0.5, 0.44, 0.125, fill)
        poly([(0.35, 0.73), (0.65, 0.73), (0.58, 0.59), (0.42, 0.59)], fill)
    elif base == "R":
        rect(0.30, 0.33, 0.70, 0.78, edge)
        for u0, u1 in ((0.30, 0.41), (0.45, 0.55), (0.59, 0.70)):
            rect(u0, 0.22, u1, 0.36, edge)
        rect(0.34, 0.37, 0.66, 0.74, fill)
        for u0, u1 in ((0.33, 0.39), (0.47, 0.53), (0.61, 0.67)):
            rect(u0, 0.25, u1, 0.36, fill)
    elif base == "N":
        poly([(0.30, 0.78), (0.68, 0.78), (0.68, 0.45), (0.76, 0.30),
              (0.54, 0.17), (0.43, 0.33), (0.30, 0.45)], edge)
        poly([(0.34, 0.74), (0.64, 0.74), (0.64, 0.46), (0.71, 0.32),
              (0.55, 0.22), (0.46, 0.36), (0.34, 0.47)], fill)
    elif base == "B":
        cv2.ellipse(canvas, pt(0.5, 0.45), (int(0.14 * k * s), int(0.27 * k * s)),
                    0, 0, 360, edge, -1)
        circle(0.5, 0.14, 0.065, edge)
        rect(0.32, 0.70, 0.68, 0.80, edge)
        cv2.ellipse(canvas, pt(0.5, 0.45), (int(0.11 * k * s), int(0.24 * k * s)),
                    0, 0, 360, fill, -1)
        circle(0.5, 0.14, 0.045, fill)
        rect(0.35, 0.72, 0.65, 0.78, fill)
    elif base == "Q":
        poly([(0.5, 0.10), (0.28, 0.62), (0.72, 0.62)], edge)
        rect(0.28, 0.62, 0.72, 0.80, edge)
        circle(0.5, 0.09, 0.06, edge)
        poly([(0.5, 0.16), (0.33, 0.60), (0.67, 0.60)], fill)
        rect(0.31, 0.64, 0.69, 0.78, fill)
        circle(0.5, 0.09, 0.04, fill)
    elif base == "K":
        rect(0.38, 0.30, 0.62, 0.80, edge)
        rect(0.45, 0.06, 0.55, 0.32, edge)
        rect(0.34, 0.14, 0.66, 0.23, edge)
        rect(0.42, 0.33, 0.58, 0.77, fill)
        rect(0.47, 0.08, 0.53, 0.31, fill)
        rect(0.37, 0.16, 0.63, 0.21, fill)


def render_canonical(
    labels: Optional[Sequence[PieceClass]] = None,
    style: Optional[BoardStyle] = None,
) -> np.ndarray:
    """Frontal board image: margin + 8x8 squares (+ optional pieces)."""
    style = style or BoardStyle()
    s, m = style.square_px, style.margin_px
    size = 8 * s + 2 * m
    img = np.full((size, size), style.background, np.uint8)
    for r in range(8):
        for c in range(8):
            color = style.light if (r + c) % 2 == 0 else style.dark
            img[m + r * s: m + (r + 1) * s, m + c * s: m + (c + 1) * s] = color
    if labels is not None:
        for i, piece in enumerate(labels):
            if piece.is_piece:
                r, c = divmod(i, 8)
                _draw_piece(img, piece, m + c * s, m + r * s, s, style)
    return img


def _perspective_quad(
    out_size: int,
    tilt_deg: float,
    roll_deg: float,
    rng: Optional[np.random.Generator],
) -> List[Point2]:
    """Project a tilted unit board plane into the output frame."""
    t = math.radians(tilt_deg)
    roll = math.radians(roll_deg)
    d = 3.0
    corners3d = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
    pts = []
    for x, y in corners3d:
        yr = y * math.cos(t)
        z = d - y * math.sin(t)
        pts.append((x / z, yr / z))
    # Fit the projected quad into the frame with a little jitter.
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    span = max(max(xs) - min(xs), max(ys) - min(ys))
    f = 0.72 * out_size / span
    cx = cy = out_size / 2.0
    if rng is not None:
        cx += rng.uniform(-0.03, 0.03) * out_size
        cy += rng.uniform(-0.03, 0.03) * out_size
    cr, sr = math.cos(roll), math.sin(roll)
    quad = []
    mx = sum(xs) / 4.0
    my = sum(ys) / 4.0
    for x, y in pts:
        x, y = x - mx, y - my
        quad.append(Point2(cx + f * (cr * x - sr * y), cy + f * (sr * x + cr * y)))
    return quad


def render_board(
    labels: Optional[Sequence[PieceClass]] = None,
    out_size: int = 640,
    tilt_deg: float = 0.0,
    roll_deg: float = 0.0,
    blur_sigma: float = 0.0,
    noise_sigma: float = 0.0,
    style: Optional[BoardStyle] = None,
    rng: Optional[np.random.Generator] = None,
) -> RenderedBoard:
    """Render a board under perspective with known ground truth."""
    style = style or BoardStyle()
    if labels is None:
        labels = [PieceClass.EMPTY] * 64
    canonical = render_canonical(labels, style)
    s, m = style.square_px, style.margin_px
    src = [
        Point2(m, m),
        Point2(m + 8 * s, m),
        Point2(m + 8 * s, m + 8 * s),
        Point2(m, m + 8 * s),
    ]
    quad = _perspective_quad(out_size, tilt_deg, roll_deg, rng)
    h = homography_from_quad(src, quad)
    img = cv2.warpPerspective(
        canonical, h.matrix, (out_size, out_size),
        flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT,
        borderValue=int(style.background),
    )
    if blur_sigma > 0:
        img = cv2.GaussianBlur(img, (0, 0), blur_sigma)
    if noise_sigma > 0:
        noise_rng = rng if rng is not None else np.random.default_rng(0)
        noise = noise_rng.normal(0, noise_sigma, img.shape)
        img = np.clip(img.astype(np.float64) + noise, 0, 255).astype(np.uint8)
    rectify = homography_from_quad(quad, UNIT_CORNERS)
    return RenderedBoard(image=img, corners=quad, rectify=rectify, labels=list(labels))


def render_square(
    piece: PieceClass,
    light: bool = True,
    out_px: int = 64,
    style: Optional[BoardStyle] = None,
    blur_sigma: float = 0.0,
) -> np.ndarray:
    """One square image, as split_squares would produce it."""
    style = style or BoardStyle()
    s = style.square_px
    img = np.full((s, s), style.light if light else style.dark, np.uint8)
    if piece.is_piece:
        _draw_piece(img, piece, 0, 0, s, style)
    if blur_sigma > 0:
        img = cv2.GaussianBlur(img, (0, 0), blur_sigma)
    return cv2.resize(img, (out_px, out_px), interpolation=cv2.INTER_AREA)


def random_legal_position(rng: np.random.Generator) -> List[PieceClass]:
    """A random position satisfying the census invariants.

    Kings always present; other pieces drawn as a random subset of a
    standard set per color; pawns never on the back ranks; a bishop pair
    lands on opposite square colors.
    """
    squares: List[Optional[PieceClass]] = [None] * 64
    free = list(range(64))
    rng.shuffle(free)

    def take(pred=None):
        for idx, sq in enumerate(free):
            if pred is None or pred(sq):
                return free.pop(idx)
        return None

    from .infer import square_is_light

    for color_white in (True, False):
        offset = 0 if color_white else 6
        king = take()
        squares[king] = PieceClass(offset)
        roster = [PieceClass(offset + 1)] + [PieceClass(offset + 2)] * 2 \
            + [PieceClass(offset + 3)] * 2 + [PieceClass(offset + 4)] * 2 \
            + [PieceClass(offset + 5)] * 8
        n = int(rng.integers(0, 16))
        rng.shuffle(roster)
        chosen = roster[:n]
        bishop_colors: set = set()
        for piece in chosen:
            if piece.letter.upper() == "P":
                sq = take(lambda s: 8 <= s < 56)
            elif piece.letter.upper() == "B":
                sq = take(lambda s: square_is_light(s) not in bishop_colors)
                if sq is not None:
                    bishop_colors.add(square_is_light(sq))
            else:
                sq = take()
            if sq is not None:
                squares[sq] = piece
    return [p if p is not None else PieceClass.EMPTY for p in squares]


def one_hot_probabilities(labels: Sequence[PieceClass]) -> np.ndarray:
    probs = np.zeros((64, 13))
    for i, p in enumerate(labels):
        probs[i, p] = 1.0
    return probs


# Confusion targets per piece type (king, queen, rook, bishop, knight,
# pawn by base ordinal): weights lean toward census-limited classes so
# the noise reproduces the error structure of a real classifier, whose
# mistakes a constraint-aware inference pass can actually correct.
_CONFUSIONS = {
    1: [(0, 1.0), (2, 0.6)],
    2: [(0, 0.8), (4, 0.6)],
    3: [(0, 0.6), (4, 0.8)],
    4: [(3, 0.8), (2, 0.6)],
    5: [(3, 0.7), (0, 0.7)],
}


def noisy_probabilities(
    labels: Sequence[PieceClass],
    rng: np.random.Generator,
    concentration: float = 6.0,
    floor: float = 0.25,
    confusion: float = 4.0,
    king_concentration: float = 20.0,
) -> np.ndarray:
    """Dirichlet-noised vectors mimicking a confusion-prone classifier.

    The true class dominates each square's concentration vector; extra
    mass goes to visually confusable classes (same type in the other
    color, similar silhouettes) biased toward census-limited pieces.
    Kings stay sharply concentrated on their own square, the way a real
    model recognizes the most distinctive piece.
    """
    alphas = np.full((64, 13), floor)
    for i, p in enumerate(labels):
        if p in (PieceClass.WK, PieceClass.BK):
            alphas[i, p] = king_concentration
            continue
        alphas[i, p] = concentration
        if p == PieceClass.EMPTY:
            continue
        off = 6 if p.is_black else 0
        for target, weight in _CONFUSIONS[p - off]:
            alphas[i, target + off] += confusion * weight
        alphas[i, (p - off) + (0 if p.is_black else 6)] += confusion * 0.5
    probs = np.empty((64, 13))
    for i in range(64):
        probs[i] = rng.dirichlet(alphas[i])
    return probs
