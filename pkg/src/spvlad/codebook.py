"""Visual-word codebooks: seeded k-means fitting and nearest-centroid assignment.

Lloyd's algorithm from k-means++ initialization, fully deterministic under a
seed. Assignment distances are computed by explicit differencing (not the
expanded dot-product form) so ties are bit-well-defined and a brute-force
scan agrees exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_ITERS = 100
_REL_MOVE_TOL = 1e-6
# Cap the per-chunk (rows x k x dim) workspace at ~64 MiB of float64.
_CHUNK_BUDGET = 8_000_000


@dataclass(frozen=True)
class Codebook:
    """k centroid vectors; row j is visual word j."""

    centroids: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.centroids, dtype=np.float32)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError(f"centroids must be a non-empty matrix, got shape {c.shape}")
        if not np.isfinite(c).all():
            raise ValueError("non-finite centroid values")
        if np.unique(c, axis=0).shape[0] != c.shape[0]:
            raise ValueError("duplicate centroids")
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _assign_chunked(centroids: np.ndarray, data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-centroid index and squared distance per row, ties to lowest index."""
    n = data.shape[0]
    k, dim = centroids.shape
    idx = np.empty(n, dtype=np.int64)
    mind2 = np.empty(n, dtype=np.float64)
    chunk = max(1, _CHUNK_BUDGET // max(k * dim, 1))
    for start in range(0, n, chunk):
        end = min(start + chunk, n)
        diff = data[start:end, None, :] - centroids[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        idx[start:end] = np.argmin(d2, axis=1)
        mind2[start:end] = d2[np.arange(end - start), idx[start:end]]
    return idx, mind2


def kmeans_fit(
    data: np.ndarray,
    k: int,
    max_iters: int = DEFAULT_MAX_ITERS,
    seed: int = 0,
    return_history: bool = False,
):
    """Fit a k-word codebook; optionally also return the distortion history.

    Stops when every centroid moves by less than 1e-6 relative to its norm,
    or after ``max_iters`` Lloyd iterations. Clusters that empty out are
    reseeded with the point currently farthest from its centroid. The
    distortion history (one value per assignment pass) is non-increasing;
    a violation indicates a numerics bug and raises.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"data must be 2-D, got shape {x.shape}")
    if k < 1:
        raise ValueError("k must be at least 1")
    n = x.shape[0]
    if n < k:
        raise ValueError(f"need at least k={k} points, got {n}")
    if not np.isfinite(x).all():
        raise ValueError("non-finite data values")
    if max_iters < 1:
        raise ValueError("max_iters must be positive")

    centroids = _plusplus_init(x, k, np.random.default_rng(seed))
    history: list[float] = []
    for _ in range(max_iters):
        idx, mind2 = _assign_chunked(centroids, x)
        distortion_now = float(mind2.sum())
        if history and distortion_now > history[-1] * (1 + 1e-12) + 1e-12:
            raise AssertionError(
                f"distortion increased: {history[-1]} -> {distortion_now}"
            )
        history.append(distortion_now)

        updated = centroids.copy()
        counts = np.bincount(idx, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                updated[j] = x[idx == j].mean(axis=0)
        if (counts == 0).any():
            updated = _reseed_empty(updated, counts, x, mind2)

        moved = np.linalg.norm(updated - centroids, axis=1)
        norms = np.linalg.norm(centroids, axis=1)
        centroids = updated
        if (moved <= _REL_MOVE_TOL * np.where(norms > 0, norms, 1.0)).all():
            break

    book = Codebook(centroids=centroids)
    return (book, history) if return_history else book


def _plusplus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[rng.integers(n)]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            raise ValueError(
                f"insufficient distinct points: fewer than k={k} distinct rows"
            )
        centroids[j] = x[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((x - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _reseed_empty(
    centroids: np.ndarray, counts: np.ndarray, x: np.ndarray, mind2: np.ndarray
) -> np.ndarray:
    """Move each empty centroid onto the point farthest from its own centroid."""
    d2 = mind2.copy()
    for j in np.flatnonzero(counts == 0):
        far = int(np.argmax(d2))
        centroids[j] = x[far]
        d2[far] = -np.inf  # each reseed takes a distinct point
    return centroids


def assign_nearest(codebook: Codebook, x: np.ndarray) -> int:
    """Index of the centroid nearest to ``x``; ties break to the lowest index."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != codebook.dim:
        raise ValueError(
            f"dimension mismatch: vector has shape {v.shape}, codebook dim is {codebook.dim}"
        )
    if not np.isfinite(v).all():
        raise ValueError("non-finite query vector")
    idx, _ = _assign_chunked(codebook.centroids.astype(np.float64), v[None, :])
    return int(idx[0])


def assign_all(codebook: Codebook, data: np.ndarray) -> np.ndarray:
    """Vectorized nearest-centroid assignment for a row matrix."""
    mat = np.asarray(data, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[1] != codebook.dim:
        raise ValueError(
            f"dimension mismatch: data has shape {mat.shape}, codebook dim is {codebook.dim}"
        )
    idx, _ = _assign_chunked(codebook.centroids.astype(np.float64), mat)
    return idx


def distortion(codebook: Codebook, data: np.ndarray) -> float:
    """Sum of squared distances from each row to its nearest centroid."""
    mat = np.asarray(data, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[1] != codebook.dim:
        raise ValueError(
            f"dimension mismatch: data has shape {mat.shape}, codebook dim is {codebook.dim}"
        )
    _, mind2 = _assign_chunked(codebook.centroids.astype(np.float64), mat)
    return float(mind2.sum())
