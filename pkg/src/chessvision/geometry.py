"""2D geometry primitives for board localization.

Points, segments, the simplified doubled-area kernel used for fast
point-to-line tests, two segment-intersection algorithms (naive pairwise
and a sweep line) with a size-based dispatch, and homographies for
rectifying the detected board.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import cv2
import numpy as np


class GeometryError(ValueError):
    """Degenerate geometric input (coincident points, singular matrix...)."""


@dataclass(frozen=True)
class Point2:
    """A point in image coordinates (pixels)."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Segment2:
    """A line segment with distinct endpoints."""

    a: Point2
    b: Point2

    def __post_init__(self):
        if self.a.x == self.b.x and self.a.y == self.b.y:
            raise GeometryError(f"zero-length segment at {self.a}")

    def length(self) -> float:
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)


def triangle_area2(x: Point2, y: Point2, z: Point2) -> float:
    """Twice the area of triangle (x, y, z).

    Expanded form of the 2D cross product norm; cheap enough to run in a
    tight loop without any vector library. Only order-preserving for
    comparisons against a fixed line; use :func:`point_line_distance` when
    comparing across different lines.
    """
    return abs((y.x - x.x) * (x.y - z.y) - (y.y - x.y) * (x.x - z.x))


def point_line_distance(p: Point2, line_a: Point2, line_b: Point2) -> float:
    """Euclidean distance from p to the infinite line through line_a, line_b."""
    dx = line_b.x - line_a.x
    dy = line_b.y - line_a.y
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        raise GeometryError("degenerate line: coincident endpoints")
    return triangle_area2(p, line_a, line_b) / norm


# ---------------------------------------------------------------------------
# Segment intersections
# ---------------------------------------------------------------------------

DEFAULT_MERGE_RADIUS = 1e-7
DEFAULT_DISPATCH_THRESHOLD = 64


def _pair_intersections(
    p1: tuple[float, float],
    q1: tuple[float, float],
    p2: tuple[float, float],
    q2: tuple[float, float],
    eps: float,
) -> list[tuple[float, float]]:
    """Intersection points of two closed segments.

    Proper crossings and endpoint touches yield one point; collinear
    overlaps yield the two endpoints of the overlap interval.
    """
    rx, ry = q1[0] - p1[0], q1[1] - p1[1]
    sx, sy = q2[0] - p2[0], q2[1] - p2[1]
    wx, wy = p2[0] - p1[0], p2[1] - p1[1]
    denom = rx * sy - ry * sx
    scale = max(abs(rx), abs(ry), abs(sx), abs(sy), 1.0)

    if abs(denom) <= eps * scale * scale:
        # Parallel. Collinear iff p2 lies on line 1.
        if abs(wx * ry - wy * rx) > eps * scale * scale:
            return []
        rr = rx * rx + ry * ry
        t0 = (wx * rx + wy * ry) / rr
        t1 = t0 + (sx * rx + sy * ry) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        lo, hi = max(lo, 0.0), min(hi, 1.0)
        if lo > hi + eps:
            return []
        pts = [(p1[0] + lo * rx, p1[1] + lo * ry)]
        if hi - lo > eps:
            pts.append((p1[0] + hi * rx, p1[1] + hi * ry))
        return pts

    t = (wx * sy - wy * sx) / denom
    u = (wx * ry - wy * rx) / denom
    if -eps <= t <= 1.0 + eps and -eps <= u <= 1.0 + eps:
        t = min(max(t, 0.0), 1.0)
        return [(p1[0] + t * rx, p1[1] + t * ry)]
    return []


def _merge_points(
    points: Iterable[tuple[float, float]], radius: float
) -> set[Point2]:
    """Deduplicate near-coincident points under a merge radius."""
    if radius <= 0:
        return {Point2(x, y) for x, y in points}
    cells: dict[tuple[int, int], list[tuple[float, float]]] = {}
    out: set[Point2] = set()
    r2 = radius * radius
    for x, y in sorted(set(points)):
        ci, cj = int(math.floor(x / radius)), int(math.floor(y / radius))
        found = False
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for px, py in cells.get((ci + di, cj + dj), ()):
                    if (px - x) ** 2 + (py - y) ** 2 <= r2:
                        found = True
                        break
                if found:
                    break
            if found:
                break
        if not found:
            cells.setdefault((ci, cj), []).append((x, y))
            out.add(Point2(x, y))
    return out


def intersections_naive(
    segments: Sequence[Segment2], merge_radius: float = DEFAULT_MERGE_RADIUS
) -> set[Point2]:
    """All pairwise segment intersections, O(n^2) pair checks.

    Beats the sweep on the small segment sets produced by board
    detection; see :func:`intersections` for the dispatch.
    """
    segs = [(s.a.as_tuple(), s.b.as_tuple()) for s in segments]
    eps = 1e-12
    points: list[tuple[float, float]] = []
    for i in range(len(segs)):
        p1, q1 = segs[i]
        for j in range(i + 1, len(segs)):
            p2, q2 = segs[j]
            points.extend(_pair_intersections(p1, q1, p2, q2, eps))
    return _merge_points(points, merge_radius)


def _y_at(seg: tuple[tuple[float, float], tuple[float, float]], x: float) -> float:
    (px, py), (qx, qy) = seg
    if qx == px:
        return min(py, qy)
    t = (x - px) / (qx - px)
    return py + t * (qy - py)


def intersections_sweep(
    segments: Sequence[Segment2], merge_radius: float = DEFAULT_MERGE_RADIUS
) -> set[Point2]:
    """All pairwise segment intersections via a left-to-right sweep.

    Bentley-Ottmann style: lexicographically ordered event queue, an
    active set ordered by y at the sweep position, neighbor checks on
    insertion/removal. Degeneracies (shared endpoints, vertical segments,
    >2 segments through one point) are handled by batch-processing every
    segment incident to one event point.
    """
    n = len(segments)
    if n < 2:
        return set()

    raw = [(s.a.as_tuple(), s.b.as_tuple()) for s in segments]
    # Orient left-to-right (lexicographic), remember vertical ones.
    segs = []
    for p, q in raw:
        if q < p:
            p, q = q, p
        segs.append((p, q))

    scale = max(
        1.0, max(max(abs(p[0]), abs(p[1]), abs(q[0]), abs(q[1])) for p, q in segs)
    )
    eps = 1e-12
    tol = 1e-9 * scale

    def on_segment(i: int, x: float, y: float) -> bool:
        (px, py), (qx, qy) = segs[i]
        if x < px - tol or x > qx + tol:
            return False
        if y < min(py, qy) - tol or y > max(py, qy) + tol:
            return False
        area = abs((qx - px) * (py - y) - (qy - py) * (px - x))
        return area <= tol * max(abs(qx - px), abs(qy - py), 1.0)

    starts: dict[tuple[float, float], list[int]] = {}
    events: list[tuple[float, float]] = []
    for i, (p, q) in enumerate(segs):
        starts.setdefault(p, []).append(i)
        events.append(p)
        events.append(q)
    heapq.heapify(events)

    active: list[int] = []  # non-vertical segments, ordered bottom-to-top
    column_verticals: list[int] = []  # verticals at the current sweep x
    column_x = -math.inf
    out: list[tuple[float, float]] = []
    scheduled: set[tuple[float, float]] = set()

    def schedule(pt: tuple[float, float], px: float, py: float) -> None:
        if pt[0] > px + tol or (pt[0] >= px - tol and pt[1] > py + tol):
            key = (round(pt[0] / tol), round(pt[1] / tol)) if tol > 0 else pt
            if key not in scheduled:
                scheduled.add(key)
                heapq.heappush(events, pt)

    def check_pair(i: int, j: int, px: float, py: float) -> None:
        for pt in _pair_intersections(*segs[i], *segs[j], eps):
            schedule(pt, px, py)

    while events:
        px, py = heapq.heappop(events)
        # Group all queued events at (numerically) the same point.
        while events and abs(events[0][0] - px) <= tol and abs(events[0][1] - py) <= tol:
            heapq.heappop(events)

        if px > column_x + tol:
            column_verticals = []
            column_x = px

        # Segments starting here.
        upper: list[int] = []
        for key in list(starts.keys()):
            if abs(key[0] - px) <= tol and abs(key[1] - py) <= tol:
                upper.extend(starts.pop(key))

        lower = [i for i in active if abs(segs[i][1][0] - px) <= tol
                 and abs(segs[i][1][1] - py) <= tol]
        crossing = [i for i in active if i not in lower and on_segment(i, px, py)]
        vert_through = [i for i in column_verticals if on_segment(i, px, py)]

        incident = len(upper) + len(lower) + len(crossing) + len(vert_through)
        if incident >= 2:
            out.append((px, py))

        drop = set(lower) | set(crossing)
        below = [i for i in active if i not in drop and _y_at(segs[i], px) < py]
        above = [i for i in active if i not in drop and _y_at(segs[i], px) >= py]

        new_verticals = [i for i in upper if abs(segs[i][0][0] - segs[i][1][0]) <= eps * scale]
        reinsert = crossing + [i for i in upper if i not in new_verticals]

        # A vertical lives only in this event column: test it against
        # everything currently active and the column's other verticals.
        for v in new_verticals:
            for j in active:
                check_pair(v, j, px, py)
            for j in column_verticals:
                check_pair(v, j, px, py)
            column_verticals.append(v)
            schedule(segs[v][1], px, py)

        if reinsert:
            # Order just to the right of the event point: by y slightly
            # ahead, falling back to slope for segments through the point.
            span = max(segs[i][1][0] for i in reinsert) - px
            dx = max(span * 1e-7, tol)
            reinsert.sort(key=lambda i: (_y_at(segs[i], px + dx), _y_at(segs[i], segs[i][1][0])))
            active = below + reinsert + above
            if below:
                check_pair(below[-1], reinsert[0], px, py)
            if above:
                check_pair(reinsert[-1], above[0], px, py)
            for a, b in zip(reinsert, reinsert[1:]):
                check_pair(a, b, px, py)
        else:
            active = below + above
            if below and above:
                check_pair(below[-1], above[0], px, py)

    return _merge_points(out, merge_radius)


def intersections(
    segments: Sequence[Segment2],
    threshold: int = DEFAULT_DISPATCH_THRESHOLD,
    merge_radius: float = DEFAULT_MERGE_RADIUS,
    on_dispatch: Optional[Callable[[str], None]] = None,
) -> set[Point2]:
    """Segment intersections with a size-based algorithm dispatch.

    The sweep's event-queue overhead dominates on small inputs, so sets
    of at most `threshold` segments go to the naive algorithm. The
    `on_dispatch` hook (called with "naive" or "sweep") exists for
    instrumentation and the crossover benchmark.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if len(segments) <= threshold:
        if on_dispatch is not None:
            on_dispatch("naive")
        return intersections_naive(segments, merge_radius)
    if on_dispatch is not None:
        on_dispatch("sweep")
    return intersections_sweep(segments, merge_radius)


# ---------------------------------------------------------------------------
# Homographies
# ---------------------------------------------------------------------------


class Homography:
    """An invertible 3x3 projective transform on image points."""

    def __init__(self, matrix, det_eps: float = 1e-12):
        m = np.asarray(matrix, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise GeometryError("non-finite homography matrix")
        if abs(np.linalg.det(m)) <= det_eps:
            raise GeometryError("homography matrix is singular")
        if m[2, 2] != 0.0:
            m = m / m[2, 2]
        self.matrix = m

    def apply(self, p: Point2) -> Point2:
        x, y = self.apply_many(np.array([[p.x, p.y]]))[0]
        return Point2(float(x), float(y))

    def apply_many(self, pts: np.ndarray) -> np.ndarray:
        """Map an (N, 2) array of points."""
        pts = np.asarray(pts, dtype=np.float64)
        ones = np.ones((pts.shape[0], 1))
        h = (self.matrix @ np.hstack([pts, ones]).T).T
        return h[:, :2] / h[:, 2:3]

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def compose(self, other: "Homography") -> "Homography":
        """self after other: (self.compose(other))(p) == self(other(p))."""
        return Homography(self.matrix @ other.matrix)


def _quad_degenerate(quad: Sequence[Point2], eps: float) -> bool:
    pts = list(quad)
    span = max(
        max(abs(p.x), abs(p.y)) for p in pts
    )
    span = max(span, 1.0)
    for i in range(4):
        for j in range(i + 1, 4):
            for k in range(j + 1, 4):
                if triangle_area2(pts[i], pts[j], pts[k]) <= eps * span * span:
                    return True
    return False


def homography_from_quad(
    src: Sequence[Point2], dst: Sequence[Point2]
) -> Homography:
    """The projective map sending the 4 src points to the 4 dst points.

    Direct linear solve of the 8-equation system; raises on quads with
    three (near-)collinear corners.
    """
    if len(src) != 4 or len(dst) != 4:
        raise GeometryError("homography_from_quad needs exactly 4 point pairs")
    if _quad_degenerate(src, 1e-9) or _quad_degenerate(dst, 1e-9):
        raise GeometryError("degenerate quad: three corners are collinear")
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, (s, d) in enumerate(zip(src, dst)):
        a[2 * i] = [s.x, s.y, 1, 0, 0, 0, -d.x * s.x, -d.x * s.y]
        a[2 * i + 1] = [0, 0, 0, s.x, s.y, 1, -d.y * s.x, -d.y * s.y]
        b[2 * i] = d.x
        b[2 * i + 1] = d.y
    h = np.linalg.solve(a, b)
    return Homography(np.append(h, 1.0))


def homography_least_squares(
    src: np.ndarray, dst: np.ndarray
) -> Homography:
    """Least-squares homography from >=4 point correspondences (DLT + SVD)."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape[0] < 4 or src.shape != dst.shape:
        raise GeometryError("need >= 4 matched point pairs")
    rows = []
    for (sx, sy), (dx, dy) in zip(src, dst):
        rows.append([sx, sy, 1, 0, 0, 0, -dx * sx, -dx * sy, -dx])
        rows.append([0, 0, 0, sx, sy, 1, -dy * sx, -dy * sy, -dy])
    _, _, vt = np.linalg.svd(np.asarray(rows))
    return Homography(vt[-1].reshape(3, 3))


def warp_crop(image: np.ndarray, h: Homography, out_size: int) -> np.ndarray:
    """Resample out_size x out_size pixels through the homography.

    `h` maps source image coordinates to output coordinates; sampling
    goes through its inverse with bilinear interpolation, black outside
    the source frame.
    """
    if out_size <= 0:
        raise ValueError("out_size must be positive")
    h.inverse()  # raises GeometryError if singular
    return cv2.warpPerspective(
        image,
        h.matrix,
        (out_size, out_size),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=0,
    )
