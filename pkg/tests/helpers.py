"""Shared helpers for the test suite."""

import math

import numpy as np

from chessvision.geometry import Point2, Segment2


def corner_error(found, truth, diagonal):
    """Worst corner distance as a fraction of the image diagonal.

    The detector cannot know which physical corner is "top-left", so the
    error is minimized over the dihedral symmetries of the square (4
    rotations x optional reflection).
    """
    f = [(p.x, p.y) for p in found]
    t = [(p.x, p.y) for p in truth]
    best = math.inf
    for candidate in (t, t[::-1]):
        for k in range(4):
            rolled = candidate[k:] + candidate[:k]
            worst = max(math.hypot(a[0] - b[0], a[1] - b[1])
                        for a, b in zip(f, rolled))
            best = min(best, worst)
    return best / diagonal


def random_segments(rng, n, span=100.0, max_len=4.0):
    """Short random segments; intersection count stays near-linear in n."""
    segs = []
    while len(segs) < n:
        x, y = rng.uniform(0, span, 2)
        dx, dy = rng.uniform(-max_len, max_len, 2)
        if abs(dx) + abs(dy) < 1e-3:
            continue
        segs.append(Segment2(Point2(x, y), Point2(x + dx, y + dy)))
    return segs


def match_point_sets(a, b, tol=1e-6):
    """Set equality of two point collections up to a matching tolerance."""
    if len(a) != len(b):
        return False
    if not a:
        return True
    pa = np.array(sorted((p.x, p.y) for p in a))
    pb = np.array(sorted((p.x, p.y) for p in b))
    return bool(np.max(np.abs(pa - pb)) <= tol)
