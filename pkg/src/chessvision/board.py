"""Board localization and square extraction.

Finds the chessboard in an image by iterating line detection, segment
intersection and lattice-point validation, fitting a homography to the
validated 7x7 interior lattice each round and re-detecting on the
rectified crop. Also provides the cheap location re-check used for a
static camera, and the 8x8 square splitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import cv2
import numpy as np

from .geometry import (
    Homography,
    Point2,
    Segment2,
    _merge_points,
    homography_from_quad,
    homography_least_squares,
    intersections,
    warp_crop,
)
from .imageio import check_image, to_gray

UNIT_CORNERS = [Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)]
# The validated lattice is the 7x7 interior grid, spanning 1/8..7/8 of
# the board in unit coordinates.
INNER_CORNERS = [
    Point2(1 / 8, 1 / 8),
    Point2(7 / 8, 1 / 8),
    Point2(7 / 8, 7 / 8),
    Point2(1 / 8, 7 / 8),
]


class DetectionError(RuntimeError):
    """Board could not be located; `iteration` is the failing round."""

    def __init__(self, message: str, iteration: int = 0):
        super().__init__(message)
        self.iteration = iteration


@dataclass
class DetectionConfig:
    max_iters: int = 5
    patch_size: int = 21
    tau_contrast: float = 0.15
    # Line sets stay small here, where the naive intersection algorithm
    # measures faster than the sweep; the benchmark harness can retune.
    intersection_threshold: int = 160
    max_lines: int = 128
    work_size: int = 640
    early_stop_frac: float = 0.002  # corner movement, fraction of diagonal
    snap_tol: float = 0.025  # lattice snap radius in unit coordinates
    point_merge_px: float = 5.0  # cluster radius for intersection candidates


@dataclass
class BoardLocation:
    """Four board corners plus the homography to the unit square."""

    corners: List[Point2]  # clockwise, starting top-left
    rectify: Homography  # image coords -> unit square

    def __post_init__(self):
        if len(self.corners) != 4:
            raise ValueError("BoardLocation needs exactly 4 corners")
        xs = [p.x for p in self.corners]
        ys = [p.y for p in self.corners]
        # Strict convexity: consistent turn direction around the quad.
        signs = set()
        for i in range(4):
            ax, ay = xs[i], ys[i]
            bx, by = xs[(i + 1) % 4], ys[(i + 1) % 4]
            cx, cy = xs[(i + 2) % 4], ys[(i + 2) % 4]
            cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
            if cross == 0:
                raise ValueError("degenerate board quadrilateral")
            signs.add(cross > 0)
        if len(signs) != 1:
            raise ValueError("board corners are not a convex quadrilateral")
        mapped = self.rectify.apply_many(np.array([[p.x, p.y] for p in self.corners]))
        target = np.array([[p.x, p.y] for p in UNIT_CORNERS])
        if np.max(np.abs(mapped - target)) > 1e-6:
            raise ValueError("rectify does not map corners to the unit square")


@dataclass
class LatticePatch:
    """Preprocessed neighborhood of a lattice-point candidate.

    `matrix` is the locally contrast-normalized intensity in [0, 1];
    `edges` is its binarized Sobel magnitude. Side length is odd so the
    candidate sits on the center pixel.
    """

    matrix: np.ndarray
    edges: np.ndarray

    def __post_init__(self):
        n = self.matrix.shape[0]
        if self.matrix.shape != (n, n) or n % 2 == 0:
            raise ValueError(f"patch must be square with odd side, got {self.matrix.shape}")


@dataclass
class GridCandidate:
    """The 49 interior lattice points of a located board, row-major."""

    points: List[Point2]

    def __post_init__(self):
        if len(self.points) != 49:
            raise ValueError(f"expected 49 grid points, got {len(self.points)}")

    @staticmethod
    def from_location(loc: BoardLocation) -> "GridCandidate":
        inv = loc.rectify.inverse()
        unit = [(j / 8.0, i / 8.0) for i in range(1, 8) for j in range(1, 8)]
        pts = inv.apply_many(np.array(unit))
        return GridCandidate([Point2(float(x), float(y)) for x, y in pts])


def extract_patch(gray: np.ndarray, point: Point2, size: int = 21) -> LatticePatch:
    """Build a LatticePatch around an image point (border-replicated)."""
    if size % 2 == 0:
        raise ValueError("patch size must be odd")
    half = size // 2
    padded = cv2.copyMakeBorder(gray, half, half, half, half, cv2.BORDER_REPLICATE)
    return _patch_from_padded(padded, point, size)


def _patch_from_padded(padded: np.ndarray, point: Point2, size: int) -> LatticePatch:
    x, y = int(round(point.x)), int(round(point.y))
    win = padded[y: y + size, x: x + size].astype(np.float64)
    lo, hi = win.min(), win.max()
    # The contrast floor keeps noise in a flat window from being
    # stretched into a fake corner pattern.
    matrix = (win - lo) / max(hi - lo, 16.0)
    gx = cv2.Sobel(matrix, cv2.CV_64F, 1, 0, ksize=3)
    gy = cv2.Sobel(matrix, cv2.CV_64F, 0, 1, ksize=3)
    mag = np.hypot(gx, gy)
    edges = (mag > 0.25 * max(mag.max(), 1e-9)).astype(np.float64)
    return LatticePatch(matrix=matrix, edges=edges)


def _quadrant_means(matrix: np.ndarray):
    n = matrix.shape[0]
    c = n // 2
    tl = matrix[:c, :c].mean()
    tr = matrix[:c, c + 1:].mean()
    bl = matrix[c + 1:, :c].mean()
    br = matrix[c + 1:, c + 1:].mean()
    return tl, tr, bl, br


def geometric_detector(patch: LatticePatch, tau_contrast: float = 0.15) -> bool:
    """X-corner test: diagonal quadrant pairs on opposite sides of the mean."""
    tl, tr, bl, br = _quadrant_means(patch.matrix)
    mean = patch.matrix.mean()
    for bright, dark in (((tl, br), (tr, bl)), ((tr, bl), (tl, br))):
        if (min(bright) > mean and max(dark) < mean
                and min(bright) - max(dark) >= tau_contrast):
            return True
    return False


def _default_secondary(patch: LatticePatch, tau_contrast: float = 0.15) -> bool:
    """Fallback verdict: relaxed contrast plus edges crossing the center."""
    if not geometric_detector(patch, tau_contrast / 2):
        return False
    c = patch.edges.shape[0] // 2
    band = patch.edges[c - 1: c + 2, c - 1: c + 2]
    return band.sum() >= 1


_secondary_detector: Callable[[LatticePatch, float], bool] = _default_secondary


def secondary_detector(patch: LatticePatch, tau_contrast: float = 0.15) -> bool:
    """Pluggable second-stage detector for patches the geometric test rejects."""
    return _secondary_detector(patch, tau_contrast)


def register_secondary_detector(
    fn: Optional[Callable[[LatticePatch, float], bool]]
) -> None:
    """Install an external detector; None restores the built-in one."""
    global _secondary_detector
    _secondary_detector = fn if fn is not None else _default_secondary


def is_lattice_point(
    gray: np.ndarray, point: Point2, config: DetectionConfig
) -> bool:
    patch = extract_patch(gray, point, config.patch_size)
    return (geometric_detector(patch, config.tau_contrast)
            or secondary_detector(patch, config.tau_contrast))


# ---------------------------------------------------------------------------
# Line detection
# ---------------------------------------------------------------------------


def _clip_line_to_image(rho: float, theta: float, w: int, h: int) -> Optional[Segment2]:
    """Clip the Hough line (rho, theta) to the image rectangle."""
    c, s = math.cos(theta), math.sin(theta)
    x0, y0 = rho * c, rho * s
    dx, dy = -s, c
    # Liang-Barsky parameter range against [0, w] x [0, h].
    t0, t1 = -math.inf, math.inf
    for p, q in ((-dx, x0 - 0), (dx, w - x0), (-dy, y0 - 0), (dy, h - y0)):
        if abs(p) < 1e-12:
            if q < 0:
                return None
            continue
        t = q / p
        if p < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
    if t0 >= t1:
        return None
    a = Point2(x0 + t0 * dx, y0 + t0 * dy)
    b = Point2(x0 + t1 * dx, y0 + t1 * dy)
    if a.x == b.x and a.y == b.y:
        return None
    return Segment2(a, b)


def detect_lines(
    image: np.ndarray,
    max_lines: int = 128,
    hough_threshold_frac: float = 0.25,
) -> List[Segment2]:
    """Candidate grid/edge lines, strongest first.

    Sobel gradient magnitude, thresholded into an edge map, standard
    Hough accumulation; peaks are deduplicated in (rho, theta) and
    clipped to the image frame.
    """
    image = check_image(image)
    h, w = image.shape[:2]
    if h < 64 or w < 64:
        raise ValueError(f"image too small for line detection: {w}x{h}")
    gray = to_gray(image)
    blurred = cv2.GaussianBlur(gray, (3, 3), 0)
    gx = cv2.Sobel(blurred, cv2.CV_64F, 1, 0, ksize=3)
    gy = cv2.Sobel(blurred, cv2.CV_64F, 0, 1, ksize=3)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak < 40:  # effectively featureless image
        return []
    # Absolute floor plus a mild relative term; a single extreme
    # gradient (e.g. a crop border) must not drown the grid edges.
    edges = (mag > max(40.0, 0.12 * peak)).astype(np.uint8) * 255
    hough_threshold = max(32, int(hough_threshold_frac * min(h, w) * 0.5))
    lines = cv2.HoughLines(edges, 1, np.pi / 360, hough_threshold)
    if lines is None:
        return []

    kept: List[tuple] = []
    segments: List[Segment2] = []
    diag = math.hypot(w, h)
    for rho, theta in lines[:, 0, :]:
        dup = False
        for krho, ktheta in kept:
            dt = abs(theta - ktheta)
            r2 = rho
            if dt > math.pi / 2:
                dt = math.pi - dt
                r2 = -rho
            if dt < math.radians(4.0) and abs(r2 - krho) < 0.02 * diag:
                dup = True
                break
        if dup:
            continue
        seg = _clip_line_to_image(float(rho), float(theta), w, h)
        if seg is not None:
            kept.append((float(rho), float(theta)))
            segments.append(seg)
        if len(segments) >= max_lines:
            break
    return segments


# ---------------------------------------------------------------------------
# Iterative localization
# ---------------------------------------------------------------------------


def _extremal_quad(points: Sequence[Point2]) -> List[Point2]:
    tl = min(points, key=lambda p: p.x + p.y)
    tr = max(points, key=lambda p: p.x - p.y)
    br = max(points, key=lambda p: p.x + p.y)
    bl = max(points, key=lambda p: p.y - p.x)
    quad = [tl, tr, br, bl]
    if len({(p.x, p.y) for p in quad}) != 4:
        raise ValueError("extremal lattice points collapse")
    return quad


def _snap_inliers(h: Homography, pts: np.ndarray, snap_tol: float):
    mapped = h.apply_many(pts)
    nodes = np.round(mapped * 8.0)
    residual = np.max(np.abs(mapped * 8.0 - nodes), axis=1) / 8.0
    inside = np.all((nodes >= 1) & (nodes <= 7), axis=1)
    return (residual < snap_tol) & inside, nodes


def _grid_hypotheses(
    validated: List[Point2], pts: np.ndarray, snap_tol: float
) -> List[Homography]:
    """Candidate board homographies, best snap score first.

    The 4 extremal points of the validated set are assumed to be
    interior lattice extremes; since spurious detections can displace an
    extreme and pieces can occlude the outer lattice ring, the seed quad
    is tried over random subsets and over one-node-deeper margins.
    """
    n = len(validated)
    rng = np.random.default_rng(0)
    subsets = [np.arange(n)]
    for _ in range(12):
        subsets.append(rng.choice(n, size=max(4, int(0.7 * n)), replace=False))
    margins = [
        (left, top, right, bottom)
        for left in (1, 2) for top in (1, 2)
        for right in (1, 2) for bottom in (1, 2)
    ]

    scored: List[tuple] = []
    for idx in subsets:
        try:
            quad = _extremal_quad([validated[i] for i in idx])
        except ValueError:
            continue
        for left, top, right, bottom in margins:
            target = [
                Point2(left / 8, top / 8),
                Point2((8 - right) / 8, top / 8),
                Point2((8 - right) / 8, (8 - bottom) / 8),
                Point2(left / 8, (8 - bottom) / 8),
            ]
            try:
                h0 = homography_from_quad(quad, target)
            except Exception:
                continue
            ok, _ = _snap_inliers(h0, pts, snap_tol)
            # Points inside the board but away from every node
            # contradict the hypothesis.
            mapped = h0.apply_many(pts)
            inside = np.all((mapped > 0.06) & (mapped < 0.94), axis=1)
            score = float(ok.sum()) - 0.3 * float((inside & ~ok).sum())
            scored.append((score, h0))
    scored.sort(key=lambda sh: -sh[0])

    unique: List[Homography] = []
    probe = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    for _, h in scored:
        c = h.inverse().apply_many(probe)
        if any(
            np.max(np.hypot(*(c - u.inverse().apply_many(probe)).T)) < 4.0
            for u in unique
        ):
            continue
        unique.append(h)
        if len(unique) >= 5:
            break
    return unique


def _corner_margin_hypotheses(
    validated: List[Point2], pts: np.ndarray, snap_tol: float
) -> List[Homography]:
    """Fallback hypotheses with an independent margin per extremal corner.

    When a rolled board loses lattice points to occlusion, the extremal
    quad can mix corners from different lattice rows or columns; the
    symmetric per-side margins in _grid_hypotheses cannot represent
    that, so every corner gets its own (x, y) node offset here.
    """
    try:
        quad = _extremal_quad(validated)
    except ValueError:
        return []
    offsets = [(mx, my) for mx in (1, 2) for my in (1, 2)]
    scored: List[tuple] = []
    for tl in offsets:
        for tr in offsets:
            for br in offsets:
                for bl in offsets:
                    target = [
                        Point2(tl[0] / 8, tl[1] / 8),
                        Point2((8 - tr[0]) / 8, tr[1] / 8),
                        Point2((8 - br[0]) / 8, (8 - br[1]) / 8),
                        Point2(bl[0] / 8, (8 - bl[1]) / 8),
                    ]
                    try:
                        h0 = homography_from_quad(quad, target)
                    except Exception:
                        continue
                    ok, _ = _snap_inliers(h0, pts, snap_tol)
                    mapped = h0.apply_many(pts)
                    inside = np.all((mapped > 0.06) & (mapped < 0.94), axis=1)
                    score = float(ok.sum()) - 0.3 * float((inside & ~ok).sum())
                    scored.append((score, h0))
    scored.sort(key=lambda sh: -sh[0])

    unique: List[Homography] = []
    probe = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    for _, h in scored:
        c = h.inverse().apply_many(probe)
        if any(
            np.max(np.hypot(*(c - u.inverse().apply_many(probe)).T)) < 4.0
            for u in unique
        ):
            continue
        unique.append(h)
        if len(unique) >= 8:
            break
    return unique


def _lattice_hits(h: Homography, padded: np.ndarray, shape, config) -> int:
    """How many of the 49 lattice points predicted by h pass the detectors."""
    height, width = shape
    half = config.patch_size // 2
    unit = np.array([[j / 8.0, i / 8.0] for i in range(1, 8) for j in range(1, 8)])
    pts = h.inverse().apply_many(unit)
    hits = 0
    for x, y in pts:
        if half <= x < width - half and half <= y < height - half:
            patch = _patch_from_padded(padded, Point2(float(x), float(y)), config.patch_size)
            if (geometric_detector(patch, config.tau_contrast)
                    or secondary_detector(patch, config.tau_contrast)):
                hits += 1
    return hits


def _fit_grid(
    validated: List[Point2], gray: np.ndarray, config: "DetectionConfig"
) -> Homography:
    """Homography (image -> unit board) from validated lattice points.

    Candidate hypotheses are ranked by how many of their predicted
    lattice points actually look like corners in the image; the winner
    is refined to sub-pixel accuracy and refit by least squares.
    """
    pts = np.array([[p.x, p.y] for p in validated])
    hypotheses = _grid_hypotheses(validated, pts, config.snap_tol)
    if not hypotheses:
        raise ValueError("no valid extremal quad among lattice candidates")

    half = config.patch_size // 2
    padded = cv2.copyMakeBorder(gray, half, half, half, half, cv2.BORDER_REPLICATE)
    best_hits = -1
    h = hypotheses[0]
    for cand in hypotheses:
        hits = _lattice_hits(cand, padded, gray.shape, config)
        if hits > best_hits:
            best_hits, h = hits, cand
    if best_hits < 40:
        # Weak verification usually means the extremal corners sit on
        # mismatched lattice rows/columns; retry with per-corner margins.
        for cand in _corner_margin_hypotheses(validated, pts, config.snap_tol):
            hits = _lattice_hits(cand, padded, gray.shape, config)
            if hits > best_hits:
                best_hits, h = hits, cand

    for tol in (config.snap_tol, config.snap_tol * 0.4):
        ok, nodes = _snap_inliers(h, pts, tol)
        if ok.sum() < 8:
            break
        src = pts[ok].astype(np.float32).reshape(-1, 1, 2)
        refined = cv2.cornerSubPix(
            gray, src.copy(), (5, 5), (-1, -1),
            (cv2.TERM_CRITERIA_EPS + cv2.TERM_CRITERIA_MAX_ITER, 20, 0.01),
        ).reshape(-1, 2).astype(np.float64)
        # Reject points the sub-pixel refinement dragged far away.
        moved = np.hypot(*(refined - pts[ok]).T)
        keep = moved < 3.0
        if keep.sum() < 8:
            refined, keep = pts[ok], np.ones(int(ok.sum()), bool)
        try:
            h = homography_least_squares(refined[keep], nodes[ok][keep] / 8.0)
        except Exception:
            break
    return h


def _validated_points(
    work: np.ndarray, config: DetectionConfig
) -> List[Point2]:
    segs = detect_lines(work, config.max_lines)
    pts = intersections(segs, config.intersection_threshold)
    # Duplicate Hough responses put clusters of near-identical
    # intersections around each true corner; one candidate per cluster
    # is enough.
    pts = _merge_points([p.as_tuple() for p in pts], config.point_merge_px)
    h, w = work.shape[:2]
    half = config.patch_size // 2
    padded = cv2.copyMakeBorder(work, half, half, half, half, cv2.BORDER_REPLICATE)
    out = []
    for p in sorted(pts, key=lambda q: (q.x, q.y)):
        if half <= p.x < w - half and half <= p.y < h - half:
            patch = _patch_from_padded(padded, p, config.patch_size)
            if (geometric_detector(patch, config.tau_contrast)
                    or secondary_detector(patch, config.tau_contrast)):
                out.append(p)
    return out


def locate_board(
    image: np.ndarray, config: Optional[DetectionConfig] = None
) -> BoardLocation:
    """Locate the board by iterative line/lattice refinement.

    Each round detects lines on the current working image, validates the
    line intersections as lattice points, fits the grid homography and
    re-crops. Stops early once the corners move less than a fraction of
    the image diagonal between rounds.
    """
    config = config or DetectionConfig()
    image = check_image(image)
    gray = to_gray(image)
    h, w = gray.shape[:2]
    diag = math.hypot(w, h)

    rectify: Optional[Homography] = None  # original -> unit board
    prev_corners: Optional[np.ndarray] = None
    work = gray
    to_work: Optional[Homography] = None  # original -> work coords

    for iteration in range(config.max_iters):
        validated = _validated_points(work, config)
        if len(validated) < 4:
            raise DetectionError(
                f"only {len(validated)} lattice points validated", iteration
            )
        try:
            grid = _fit_grid(validated, work, config)
        except Exception as exc:
            raise DetectionError(f"grid fit failed: {exc}", iteration) from exc
        new_rectify = grid if to_work is None else grid.compose(to_work)
        corners = new_rectify.inverse().apply_many(
            np.array([[p.x, p.y] for p in UNIT_CORNERS])
        )
        if prev_corners is not None:
            move = np.max(np.hypot(*(corners - prev_corners).T))
            if move > 0.08 * diag:
                # A refinement round may polish the fit, not jump; a
                # jump means this round latched onto a wrong grid.
                break
            rectify = new_rectify
            prev_corners = corners
            if move < config.early_stop_frac * diag:
                break
        else:
            rectify = new_rectify
            prev_corners = corners
        scale = Homography(np.diag([config.work_size, config.work_size, 1.0]))
        to_work = scale.compose(rectify)
        work = warp_crop(gray, to_work, config.work_size)

    corner_pts = [Point2(float(x), float(y)) for x, y in prev_corners]
    # Re-anchor the homography exactly on the final corners.
    rectify = homography_from_quad(corner_pts, UNIT_CORNERS)
    try:
        return BoardLocation(corners=corner_pts, rectify=rectify)
    except ValueError as exc:
        raise DetectionError(f"implausible board quad: {exc}", config.max_iters) from exc


def check_board_location(
    image: np.ndarray,
    grid: GridCandidate,
    tolerance: int = 20,
    config: Optional[DetectionConfig] = None,
) -> bool:
    """Cheap static-camera re-check of a known board location.

    Tests each of the 49 interior lattice points with the geometric
    detector, falling back to the secondary detector, and accepts the
    location when at least `tolerance` points are still found.
    """
    config = config or DetectionConfig()
    image = check_image(image)
    gray = to_gray(image)
    h, w = gray.shape[:2]
    for p in grid.points:
        if not (0 <= p.x < w and 0 <= p.y < h):
            raise ValueError(f"grid point ({p.x:.1f}, {p.y:.1f}) outside image")
    found = sum(1 for p in grid.points if is_lattice_point(gray, p, config))
    return found >= tolerance


def split_squares(
    image: np.ndarray,
    loc: BoardLocation,
    out_px: int = 224,
    top_extension: float = 0.0,
) -> List[np.ndarray]:
    """Rectify the board and slice it into its 64 square images.

    Index 0 is the rectified top-left square (a8), 63 the bottom-right
    (h1). top_extension grows each crop upward by that fraction of the
    square height (clamped at the board edge) to keep tall pieces.
    """
    if out_px <= 0:
        raise ValueError("out_px must be positive")
    image = check_image(image)
    scale = Homography(np.diag([8 * out_px, 8 * out_px, 1.0]))
    board = warp_crop(image, scale.compose(loc.rectify), 8 * out_px)
    ext = int(round(top_extension * out_px))
    squares = []
    for r in range(8):
        for c in range(8):
            y0 = max(0, r * out_px - ext)
            squares.append(board[y0: (r + 1) * out_px, c * out_px: (c + 1) * out_px])
    return squares
