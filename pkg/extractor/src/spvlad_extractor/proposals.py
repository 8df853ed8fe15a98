"""Region proposal generation: edge-density scoring or a sliding grid.

``edge_based`` ranks a multi-scale box grid by interior Canny-edge density,
descending; ``sliding_grid`` returns the same grid in plain raster order.
Both are fully deterministic. Proposal quality is deliberately not a
correctness concern for anything downstream; order and geometry are.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

MIN_IMAGE_SIDE = 32
GRID_SCALES = (0.5, 0.25, 0.125)
_EDGE_MARGIN = 0.125  # interior fraction trimmed per side when scoring
_DENSITY_EXPONENT = 0.75


@dataclass(frozen=True)
class Proposal:
    """A candidate region in absolute pixels plus its ranking score."""

    x: float
    y: float
    w: float
    h: float
    score: float


def _grid_boxes(width: int, height: int) -> list[tuple[int, int, int, int]]:
    """Multi-scale sliding grid, scale-major then raster order, deduplicated."""
    boxes: list[tuple[int, int, int, int]] = []
    seen = set()
    for scale in GRID_SCALES:
        bw = max(16, int(width * scale))
        bh = max(16, int(height * scale))
        for y in range(0, height - bh + 1, max(1, bh // 2)):
            for x in range(0, width - bw + 1, max(1, bw // 2)):
                key = (x, y, bw, bh)
                if key not in seen:
                    seen.add(key)
                    boxes.append(key)
    return boxes


def _check_size(width: int, height: int) -> None:
    if width < MIN_IMAGE_SIDE or height < MIN_IMAGE_SIDE:
        raise ValueError(
            f"image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {width}x{height}"
        )


def sliding_grid_proposals(width: int, height: int, max_regions: int) -> list[Proposal]:
    """Grid boxes in deterministic raster order, scored by that order."""
    _check_size(width, height)
    boxes = _grid_boxes(width, height)[:max_regions]
    n = len(boxes)
    return [
        Proposal(float(x), float(y), float(w), float(h), float(n - i))
        for i, (x, y, w, h) in enumerate(boxes)
    ]


def edge_based_proposals(image: np.ndarray, max_regions: int) -> list[Proposal]:
    """Grid boxes ranked by interior edge density, descending.

    An image with no detected edges at all (e.g. uniform gray) falls back to
    a single full-image box.
    """
    if image.ndim == 3:
        gray = cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)
    else:
        gray = image
    height, width = gray.shape[:2]
    _check_size(width, height)

    edges = cv2.Canny(gray, 50, 150)
    integral = cv2.integral((edges > 0).astype(np.float64))

    scored = []
    for x, y, w, h in _grid_boxes(width, height):
        mx = int(w * _EDGE_MARGIN)
        my = int(h * _EDGE_MARGIN)
        x0, y0 = x + mx, y + my
        x1, y1 = x + w - mx, y + h - my
        inner = (
            integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]
        )
        if inner > 0:
            scored.append(Proposal(float(x), float(y), float(w), float(h), float(inner / (w * h) ** _DENSITY_EXPONENT)))
    if not scored:
        return [Proposal(0.0, 0.0, float(width), float(height), 0.0)]
    # stable sort: equal scores keep raster order
    scored.sort(key=lambda p: -p.score)
    return scored[:max_regions]
