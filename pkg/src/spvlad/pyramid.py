"""Spatial-pyramid VLAD: per-cell residual codes concatenated across grids.

Regions are routed to pyramid cells by their box centers. Each cell is
VLAD-encoded over exactly its regions against the shared codebook, per-cell
stages of the normalization scheme (signed power, intra-block L2) run on
each cell code, the cells are concatenated level-major then row-major, and
the global-L2 stage, when enabled, runs once over the full concatenation.
With a single 1x1 level this reduces exactly to plain normalized VLAD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .descriptors import DescriptorSet
from .vlad import (
    NormalizationScheme,
    VladCode,
    l2_normalize_blocks,
    l2_normalize_global,
    signed_power,
    vlad_encode,
)

DEFAULT_LEVELS = ((1, 1), (2, 2))


@dataclass(frozen=True)
class PyramidSpec:
    """Ordered grid shapes, e.g. ((1, 1), (2, 2)) for a whole-image + 2x2 pyramid."""

    levels: tuple[tuple[int, int], ...] = DEFAULT_LEVELS

    def __post_init__(self):
        levels = tuple((int(r), int(c)) for r, c in self.levels)
        if not levels:
            raise ValueError("pyramid needs at least one level")
        if any(r < 1 or c < 1 for r, c in levels):
            raise ValueError(f"grid shapes must be at least 1x1, got {levels}")
        object.__setattr__(self, "levels", levels)

    @property
    def total_cells(self) -> int:
        return sum(r * c for r, c in self.levels)


DEFAULT_PYRAMID = PyramidSpec()


@dataclass(frozen=True)
class SpVladCode:
    """Concatenation of per-cell VLAD codes, one block of k*dim per cell."""

    spec: PyramidSpec
    k: int
    dim: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        expected = self.spec.total_cells * self.k * self.dim
        if v.shape != (expected,):
            raise ValueError(
                f"values must have length cells*k*dim = {expected}, got shape {v.shape}"
            )
        if not np.isfinite(v).all():
            raise ValueError("non-finite code values")
        object.__setattr__(self, "values", v)

    def cell(self, flat_cell_index: int) -> np.ndarray:
        size = self.k * self.dim
        if not 0 <= flat_cell_index < self.spec.total_cells:
            raise IndexError(f"cell index {flat_cell_index} out of range")
        return self.values[flat_cell_index * size : (flat_cell_index + 1) * size]


def assign_cell(
    center: tuple[float, float], image_size: tuple[int, int], grid: tuple[int, int]
) -> int:
    """Half-open cell index of ``center`` within a rows x cols grid.

    Cells are row-major; a center exactly on an interior boundary belongs to
    the higher-index cell. Centers outside [0, W) x [0, H) are rejected.
    """
    x, y = center
    width, height = image_size
    rows, cols = grid
    if not (0 <= x < width and 0 <= y < height):
        raise ValueError(
            f"center ({x}, {y}) outside image extent {width}x{height}"
        )
    col = min(int(math.floor(x * cols / width)), cols - 1)
    row = min(int(math.floor(y * rows / height)), rows - 1)
    return row * cols + col


def sp_vlad_encode(
    dset: DescriptorSet,
    codebook: Codebook,
    spec: PyramidSpec = DEFAULT_PYRAMID,
    scheme: NormalizationScheme = NormalizationScheme(),
) -> SpVladCode:
    """Spatial-pyramid VLAD code of a descriptor set already at codebook dim."""
    if dset.dim != codebook.dim:
        raise ValueError(
            f"dimension mismatch: descriptors have dim {dset.dim}, "
            f"codebook dim is {codebook.dim}"
        )
    mat = np.asarray(dset.descriptors, dtype=np.float64)
    image_size = (dset.image_width, dset.image_height)
    cell_codes: list[np.ndarray] = []
    for grid in spec.levels:
        rows, cols = grid
        cell_of = np.array(
            [assign_cell(r.center(), image_size, grid) for r in dset.regions],
            dtype=np.int64,
        )
        for cell_index in range(rows * cols):
            sub = mat[cell_of == cell_index]
            code = vlad_encode(sub, codebook).values
            if scheme.power is not None:
                code = signed_power(code, scheme.power)
            if scheme.intra_block_l2:
                code = l2_normalize_blocks(code, codebook.dim)
            cell_codes.append(code)
    values = np.concatenate(cell_codes)
    if scheme.global_l2:
        values = l2_normalize_global(values)
    return SpVladCode(spec=spec, k=codebook.k, dim=codebook.dim, values=values)
