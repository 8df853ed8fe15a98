"""Linear dimensionality reduction learned from sampled descriptors.

The projection is fit by exact eigendecomposition of the d x d sample
covariance (feasible up to d = 4096), with an optional seeded subsample cap
to bound memory on large pools. Model arrays are stored float32 to match
the serialized form; arithmetic runs in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SAMPLE_CAP = 220_000
DEFAULT_SEED = 42
_ORTHO_TOL = 1e-6


@dataclass(frozen=True)
class PcaModel:
    """Mean vector plus a projection matrix with orthonormal rows.

    Rows of ``projection`` are principal directions ordered by decreasing
    explained variance. With ``whiten`` set, transformed coordinates are
    additionally scaled to unit variance via ``scales``.
    """

    mean: np.ndarray
    projection: np.ndarray
    whiten: bool = False
    scales: np.ndarray | None = None

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=np.float32)
        proj = np.ascontiguousarray(self.projection, dtype=np.float32)
        if mean.ndim != 1 or proj.ndim != 2:
            raise ValueError("mean must be a vector and projection a matrix")
        if proj.shape[1] != mean.shape[0]:
            raise ValueError(
                f"projection columns ({proj.shape[1]}) must match mean length ({mean.shape[0]})"
            )
        if proj.shape[0] > proj.shape[1]:
            raise ValueError("output_dim must not exceed input_dim")
        if not (np.isfinite(mean).all() and np.isfinite(proj).all()):
            raise ValueError("non-finite PCA model values")
        p64 = proj.astype(np.float64)
        gram = p64 @ p64.T
        if np.abs(gram - np.eye(proj.shape[0])).max() > _ORTHO_TOL:
            raise ValueError("projection rows are not orthonormal")
        if self.whiten:
            if self.scales is None:
                raise ValueError("whitened model requires scales")
            scales = np.ascontiguousarray(self.scales, dtype=np.float32)
            if scales.shape != (proj.shape[0],):
                raise ValueError("scales length must equal output_dim")
            object.__setattr__(self, "scales", scales)
        elif self.scales is not None:
            raise ValueError("scales only valid with whiten=True")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "projection", proj)

    @property
    def input_dim(self) -> int:
        return self.projection.shape[1]

    @property
    def output_dim(self) -> int:
        return self.projection.shape[0]


def pca_fit(
    samples: np.ndarray,
    output_dim: int,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
    seed: int = DEFAULT_SEED,
    whiten: bool = False,
) -> PcaModel:
    """Fit the top ``output_dim`` principal directions of ``samples``.

    If the pool exceeds ``sample_cap`` rows, a seeded uniform subsample of
    ``sample_cap`` rows is used. Each direction's sign is fixed so its
    largest-magnitude entry is positive, making fits reproducible.
    """
    data = np.asarray(samples, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"samples must be 2-D, got shape {data.shape}")
    if output_dim < 1:
        raise ValueError("output_dim must be at least 1")
    if not np.isfinite(data).all():
        raise ValueError("non-finite sample values")
    if sample_cap < 1:
        raise ValueError("sample_cap must be positive")
    n, input_dim = data.shape
    if output_dim > input_dim:
        raise ValueError(f"output_dim {output_dim} exceeds input_dim {input_dim}")
    if n > sample_cap:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(n, size=sample_cap, replace=False))
        data = data[keep]
        n = sample_cap
    if n < output_dim:
        raise ValueError(f"need at least {output_dim} samples after capping, got {n}")

    mean = data.mean(axis=0)
    centered = data - mean
    cov = (centered.T @ centered) / max(n - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:output_dim]
    components = eigvecs[:, order].T
    variances = eigvals[order]

    # Eigenvector sign is arbitrary; pin it for reproducible models.
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0

    scales = None
    if whiten:
        scales = 1.0 / np.sqrt(np.maximum(variances, 1e-12))
    return PcaModel(mean=mean, projection=components, whiten=whiten, scales=scales)


def pca_transform(model: PcaModel, descriptors: np.ndarray) -> np.ndarray:
    """Project rows of ``descriptors`` onto the model's principal directions."""
    mat = np.asarray(descriptors, dtype=np.float64)
    if mat.ndim != 2:
        raise ValueError(f"descriptors must be 2-D, got shape {mat.shape}")
    if mat.shape[1] != model.input_dim:
        raise ValueError(
            f"dimension mismatch: descriptors have {mat.shape[1]} columns, "
            f"model expects {model.input_dim}"
        )
    out = (mat - model.mean.astype(np.float64)) @ model.projection.astype(np.float64).T
    if model.whiten:
        out = out * model.scales.astype(np.float64)
    return out
