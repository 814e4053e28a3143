"""Scikit-learn style wrapper around the digitization pipeline.

Useful for slotting board digitization into sklearn tooling (grid
search over detection parameters, pipelines that post-process FEN
output). fit() locates the board on a reference frame so that predict()
can take the cheap cached-check path on a static camera.
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .board import BoardLocation
from .pipeline import PipelineConfig, digitize


class ChessDigitizer(BaseEstimator):
    """Image(s) of a physical chessboard -> FEN placement string(s).

    Parameters mirror PipelineConfig; see there for semantics. The
    estimator is stateless apart from the cached board location learned
    by fit().
    """

    def __init__(
        self,
        backend: str = "baseline",
        probability_file: str = "",
        rotate_180: bool = False,
        max_iters: int = 5,
        patch_size: int = 21,
        tau_contrast: float = 0.15,
        check_tolerance: int = 20,
        out_px: int = 224,
        top_extension: float = 0.0,
    ):
        self.backend = backend
        self.probability_file = probability_file
        self.rotate_180 = rotate_180
        self.max_iters = max_iters
        self.patch_size = patch_size
        self.tau_contrast = tau_contrast
        self.check_tolerance = check_tolerance
        self.out_px = out_px
        self.top_extension = top_extension

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            backend=self.backend,
            probability_file=self.probability_file,
            rotate_180=self.rotate_180,
            max_iters=self.max_iters,
            patch_size=self.patch_size,
            tau_contrast=self.tau_contrast,
            check_tolerance=self.check_tolerance,
            out_px=self.out_px,
            top_extension=self.top_extension,
        )

    def fit(self, X, y=None) -> "ChessDigitizer":
        """Locate the board on a reference frame and cache the location."""
        image = _first_image(X)
        result = digitize(image, self._config())
        self.location_: BoardLocation = result.location
        return self

    def predict(self, X) -> List[str]:
        """FEN placement string for each input image."""
        config = self._config()
        cached: Optional[BoardLocation] = getattr(self, "location_", None)
        out = []
        for image in _iter_images(X):
            result = digitize(image, config, cached_location=cached)
            cached = result.location
            out.append(result.fen)
        return out


def _iter_images(X) -> Sequence[np.ndarray]:
    if isinstance(X, np.ndarray) and X.ndim in (2, 3) and X.dtype == np.uint8:
        return [X]
    return list(X)


def _first_image(X) -> np.ndarray:
    images = _iter_images(X)
    if not images:
        raise ValueError("fit needs at least one image")
    return images[0]
