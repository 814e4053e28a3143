"""Per-square piece classification.

A classifier backend is any callable taking 64 square images and
returning a (64, 13) array of class scores in the PieceClass ordinal
order. Two backends ship with the package: a file-backed vector source
for probability vectors computed by an external model, and a small
feature heuristic good enough for end-to-end desk runs on clean
images. Heavyweight CNN backends plug in through the same interface.
"""

from __future__ import annotations

from typing import Callable, Dict, Sequence

import numpy as np

from .imageio import to_gray
from .pieces import NUM_CLASSES, PieceClass


class ClassificationError(Exception):
    """Raised when a backend fails or emits a non-normalizable vector."""


Backend = Callable[[Sequence[np.ndarray]], np.ndarray]


# ---------------------------------------------------------------------------
# baseline heuristic backend

# Silhouette templates: (relative height, width of the top / middle /
# bottom thirds of the bounding box). Fitted once against the synthetic
# renderer across its style range; real photographs need a real model.
_TYPE_TEMPLATES = {
    "K": np.array([0.84, 1.00, 0.63, 0.68]),
    "Q": np.array([0.85, 0.38, 0.86, 1.00]),
    "R": np.array([0.64, 1.00, 0.88, 0.97]),
    "B": np.array([0.84, 0.61, 0.70, 1.00]),
    "N": np.array([0.68, 0.79, 0.89, 0.84]),
    "P": np.array([0.53, 0.74, 0.71, 1.00]),
}
_TYPE_ORDER = "KQRBNP"
_TEMPLATE_SIGMA = 0.085
_EMPTY_GAIN = 260.0
_EMPTY_DENSITY = 0.025
_COLOR_PENALTY = 8.0


def _silhouette_features(mask: np.ndarray, side: int):
    """(relative height, top/middle/bottom width fractions) of a blob mask."""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if len(rows) == 0 or len(cols) == 0:
        return None
    r0, r1 = rows[0], rows[-1] + 1
    c0, c1 = cols[0], cols[-1] + 1
    box = mask[r0:r1, c0:c1]
    height, width = box.shape
    h_rel = height / side
    thirds = np.array_split(np.arange(height), 3)
    widths = [
        box[t].any(axis=0).mean() if len(t) else 0.0
        for t in thirds
    ]
    return np.array([h_rel, *widths])


def baseline_classifier(square: np.ndarray) -> np.ndarray:
    """13-class probability vector for one square image.

    Occupancy comes from foreground density in the square's center,
    color from the foreground median against the border background, and
    type from a silhouette height/width profile matched against fixed
    templates; scores go through a softmax. Contrast is normalized from
    the square's own min/max, so the output is invariant to a small
    constant intensity offset.
    """
    gray = to_gray(square).astype(np.float64) / 255.0
    side = min(gray.shape)
    if side < 16:
        raise ValueError(f"square too small to classify: {gray.shape}")
    lo, hi = float(gray.min()), float(gray.max())
    norm = (gray - lo) / max(hi - lo, 0.125)

    # Inset enough that warp slivers from neighboring squares stay out.
    h, w = norm.shape
    m = max(2, int(0.08 * side))
    inner = norm[m:h - m, m:w - m]
    ring = np.concatenate([
        inner[:2].ravel(), inner[-2:].ravel(),
        inner[:, :2].ravel(), inner[:, -2:].ravel(),
    ])
    bg = float(np.median(ring))
    mask = np.abs(inner - bg) > 0.30
    density = float(mask.mean())

    scores = np.full(NUM_CLASSES, -30.0)
    scores[PieceClass.EMPTY] = _EMPTY_GAIN * (_EMPTY_DENSITY - density)

    feats = _silhouette_features(mask, side - 2 * m)
    if feats is not None and density >= _EMPTY_DENSITY:
        fg_med = float(np.median(inner[mask]))
        is_white = fg_med > bg
        for k, letter in enumerate(_TYPE_ORDER):
            fit = -float(np.sum((feats - _TYPE_TEMPLATES[letter]) ** 2))
            fit /= 2 * _TEMPLATE_SIGMA ** 2
            scores[k] = fit if is_white else fit - _COLOR_PENALTY
            scores[k + 6] = fit if not is_white else fit - _COLOR_PENALTY

    scores -= scores.max()
    probs = np.exp(scores)
    return probs / probs.sum()


def _baseline_backend(squares: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([baseline_classifier(sq) for sq in squares])


# ---------------------------------------------------------------------------
# file-backed backend

def load_probability_file(path) -> np.ndarray:
    """Read a 64 x 13 probability matrix from plain text.

    One line per square in board order, 13 space-separated reals in the
    PieceClass ordinal order; '#' lines are comments. Rows must be
    normalized to within 1e-3.
    """
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != NUM_CLASSES:
                raise ClassificationError(
                    f"{path}: row {lineno} has {len(parts)} values, expected {NUM_CLASSES}"
                )
            try:
                values = [float(v) for v in parts]
            except ValueError as exc:
                raise ClassificationError(f"{path}: row {lineno}: {exc}") from exc
            if not all(np.isfinite(values)):
                raise ClassificationError(f"{path}: row {lineno} has non-finite values")
            total = sum(values)
            if abs(total - 1.0) > 1e-3:
                raise ClassificationError(
                    f"{path}: row {lineno} sums to {total:.6f}, expected 1"
                )
            rows.append([v / total for v in values])
    if len(rows) != 64:
        raise ClassificationError(f"{path}: expected 64 probability rows, got {len(rows)}")
    return np.array(rows)


def file_backend(path) -> Backend:
    """Backend that ignores the images and replays vectors from a file."""
    probs = load_probability_file(path)

    def run(squares: Sequence[np.ndarray]) -> np.ndarray:
        if len(squares) != 64:
            raise ClassificationError(f"expected 64 squares, got {len(squares)}")
        return probs.copy()

    return run


# ---------------------------------------------------------------------------
# registry and the batch entry point

_BACKENDS: Dict[str, Callable[..., Backend]] = {
    "baseline": lambda: _baseline_backend,
    "file": file_backend,
}


def register_backend(name: str, factory: Callable[..., Backend]) -> None:
    _BACKENDS[name] = factory


def make_backend(name: str, *args) -> Backend:
    if name not in _BACKENDS:
        raise ClassificationError(
            f"unknown classifier backend {name!r} (have: {sorted(_BACKENDS)})"
        )
    return _BACKENDS[name](*args)


def classify_squares(backend: Backend, squares: Sequence[np.ndarray]) -> np.ndarray:
    """Run one batch of 64 squares through a backend; normalize and check."""
    if len(squares) != 64:
        raise ClassificationError(f"expected 64 square images, got {len(squares)}")
    try:
        raw = np.asarray(backend(squares), dtype=np.float64)
    except ClassificationError:
        raise
    except Exception as exc:
        raise ClassificationError(f"classifier backend failed: {exc}") from exc
    if raw.shape != (64, NUM_CLASSES):
        raise ClassificationError(
            f"backend returned shape {raw.shape}, expected (64, {NUM_CLASSES})"
        )
    out = np.empty_like(raw)
    for i in range(64):
        row = raw[i]
        if not np.all(np.isfinite(row)) or np.any(row < 0):
            raise ClassificationError(f"square {i}: invalid probability vector")
        total = row.sum()
        if abs(total - 1.0) > 1e-3:
            raise ClassificationError(
                f"square {i}: probabilities sum to {total:.6f}, expected 1"
            )
        out[i] = row / total
    return out
