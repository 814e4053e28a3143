"""Image and fixture file I/O.

Images are numpy uint8 arrays, (H, W) grayscale or (H, W, 3) color.
Fixture ground truth lives in a sidecar text file next to the PNG: four
"x y" lines, one board corner per line, clockwise from the top-left.
"""

from __future__ import annotations

from pathlib import Path
from typing import List

import cv2
import numpy as np

from .geometry import Point2


def check_image(image: np.ndarray) -> np.ndarray:
    """Validate the supported image layout (uint8, 1 or 3 channels)."""
    image = np.asarray(image)
    if image.dtype != np.uint8:
        raise ValueError(f"expected uint8 samples, got {image.dtype}")
    if image.ndim == 2:
        return image
    if image.ndim == 3 and image.shape[2] in (1, 3):
        return image
    raise ValueError(f"unsupported image shape {image.shape}")


def to_gray(image: np.ndarray) -> np.ndarray:
    image = check_image(image)
    if image.ndim == 3:
        if image.shape[2] == 1:
            return image[:, :, 0]
        return cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)
    return image


def read_image(path) -> np.ndarray:
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise FileNotFoundError(f"cannot read image: {path}")
    if img.ndim == 3 and img.shape[2] == 4:
        img = cv2.cvtColor(img, cv2.COLOR_BGRA2BGR)
    return check_image(img)


def write_image(path, image: np.ndarray) -> None:
    if not cv2.imwrite(str(path), check_image(image)):
        raise IOError(f"cannot write image: {path}")


def sidecar_path(image_path) -> Path:
    return Path(image_path).with_suffix(".txt")


def write_corners_sidecar(image_path, corners: List[Point2]) -> None:
    lines = [f"{p.x} {p.y}" for p in corners]
    sidecar_path(image_path).write_text("\n".join(lines) + "\n")


def read_corners_sidecar(image_path) -> List[Point2]:
    corners = []
    for line in sidecar_path(image_path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        x, y = line.split()
        corners.append(Point2(float(x), float(y)))
    if len(corners) != 4:
        raise ValueError(f"expected 4 corners in {sidecar_path(image_path)}")
    return corners
