"""VLAD residual aggregation of descriptor sets against a codebook.

Each descriptor is hard-assigned to its nearest visual word; block j of the
code is the sum of residuals (centroid minus descriptor) over the rows
assigned to word j, and the blocks are concatenated in centroid order. The
residual orientation here is centroid - descriptor; for a linear classifier
downstream this is equivalent to the opposite convention, but it is pinned
by tests, so keep it.

Normalization is a separate, configurable step. Stage order is fixed:
signed power first, then per-block L2, then global L2. Zero vectors and
zero blocks pass through every stage unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook, assign_all


@dataclass(frozen=True)
class NormalizationScheme:
    """Which normalization stages to apply, in the fixed stage order."""

    power: float | None = None
    intra_block_l2: bool = False
    global_l2: bool = True

    def __post_init__(self):
        if self.power is not None and not (0.0 < self.power <= 1.0):
            raise ValueError(f"power must lie in (0, 1], got {self.power}")


GLOBAL_L2_ONLY = NormalizationScheme()


@dataclass(frozen=True)
class VladCode:
    """Concatenated residual blocks; block j sits at offset j*dim."""

    k: int
    dim: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if self.k < 1 or self.dim < 1:
            raise ValueError("k and dim must be positive")
        if v.shape != (self.k * self.dim,):
            raise ValueError(
                f"values must have length k*dim = {self.k * self.dim}, got shape {v.shape}"
            )
        if not np.isfinite(v).all():
            raise ValueError("non-finite code values")
        object.__setattr__(self, "values", v)

    def block(self, j: int) -> np.ndarray:
        if not 0 <= j < self.k:
            raise IndexError(f"block index {j} out of range for k={self.k}")
        return self.values[j * self.dim : (j + 1) * self.dim]


def vlad_encode(descriptors: np.ndarray, codebook: Codebook) -> VladCode:
    """Unnormalized VLAD code of ``descriptors`` against ``codebook``.

    An empty descriptor matrix encodes as the all-zero code (the empty-sum
    convention), as does any visual word with no assigned rows.
    """
    mat = np.asarray(descriptors, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"descriptors must be 2-D, got shape {mat.shape}")
    if mat.shape[1] != codebook.dim:
        raise ValueError(
            f"dimension mismatch: descriptors have {mat.shape[1]} columns, "
            f"codebook dim is {codebook.dim}"
        )
    k, dim = codebook.k, codebook.dim
    out = np.zeros(k * dim, dtype=np.float64)
    if mat.shape[0] == 0:
        return VladCode(k=k, dim=dim, values=out)
    centroids = codebook.centroids.astype(np.float64)
    idx = assign_all(codebook, mat)
    for j in range(k):
        rows = mat[idx == j]
        if rows.shape[0]:
            out[j * dim : (j + 1) * dim] = (centroids[j] - rows).sum(axis=0)
    return VladCode(k=k, dim=dim, values=out)


def signed_power(values: np.ndarray, power: float) -> np.ndarray:
    """Element-wise sign(v) * |v|**power."""
    return np.sign(values) * np.abs(values) ** power


def l2_normalize_blocks(values: np.ndarray, block_size: int) -> np.ndarray:
    """L2-normalize each contiguous block; zero blocks pass through."""
    blocks = values.reshape(-1, block_size)
    norms = np.linalg.norm(blocks, axis=1, keepdims=True)
    return (blocks / np.where(norms > 0, norms, 1.0)).ravel()


def l2_normalize_global(values: np.ndarray) -> np.ndarray:
    """L2-normalize the whole vector; the zero vector passes through."""
    norm = np.linalg.norm(values)
    return values / norm if norm > 0 else values


def normalize(code: VladCode, scheme: NormalizationScheme) -> VladCode:
    """Apply the scheme's enabled stages in fixed order to a copy of ``code``."""
    values = code.values.copy()
    if scheme.power is not None:
        values = signed_power(values, scheme.power)
    if scheme.intra_block_l2:
        values = l2_normalize_blocks(values, code.dim)
    if scheme.global_l2:
        values = l2_normalize_global(values)
    return VladCode(k=code.k, dim=code.dim, values=values)
