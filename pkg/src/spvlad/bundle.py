"""Model bundle and code-vector files.

A bundle is everything needed to encode and classify new images
deterministically: the pipeline configuration plus the fitted PCA,
codebook, and SVM. Layout (little-endian):

    magic "VLDB", version uint32
    config: uint32 byte length + canonical JSON
    pca section:      uint32 present flag; if set: input_dim, output_dim,
                      whiten flag (uint32 each), mean, projection row-major,
                      then per-component scales when whitened (float32)
    codebook section: uint32 present flag; if set: k, dim (uint32),
                      centroids row-major (float32)
    svm section:      uint32 class count; per class uint32 UTF-8 byte length
                      + name bytes; uint32 feature_dim; float32 c;
                      weights row-major + biases (float32)

The PCA and codebook sections are absent for raw-feature bundles. A code
file is simply uint32 length + float32 values.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codebook import Codebook
from .config import PipelineConfig
from .pca import PcaModel
from .svm import LinearSvmModel

BUNDLE_MAGIC = b"VLDB"
BUNDLE_VERSION = 1


class BundleError(ValueError):
    """A bundle or code file is malformed or internally inconsistent."""


@dataclass(frozen=True)
class ModelBundle:
    """Fitted pipeline state; immutable and internally dimension-consistent."""

    config: PipelineConfig
    pca: PcaModel | None
    codebook: Codebook | None
    svm: LinearSvmModel
    format_version: int = BUNDLE_VERSION

    def __post_init__(self):
        setting = self.config.setting
        if setting == "raw_features":
            if self.pca is not None or self.codebook is not None:
                raise ValueError("raw_features bundles carry no PCA or codebook")
            return
        if self.pca is None or self.codebook is None:
            raise ValueError(f"{setting} bundles need both a PCA model and a codebook")
        if self.codebook.dim != self.pca.output_dim:
            raise ValueError(
                f"codebook dim {self.codebook.dim} != pca output dim {self.pca.output_dim}"
            )
        if self.codebook.k != self.config.k:
            raise ValueError(f"codebook has k={self.codebook.k}, config says {self.config.k}")
        expected = self.expected_code_length()
        if self.svm.feature_dim != expected:
            raise ValueError(
                f"svm feature dim {self.svm.feature_dim} != expected code length {expected}"
            )

    def expected_code_length(self) -> int:
        if self.config.setting == "raw_features":
            return self.svm.feature_dim
        per_cell = self.codebook.k * self.codebook.dim
        if self.config.setting == "vlad":
            return per_cell
        return self.config.pyramid.total_cells * per_cell


def _canonical_config_bytes(config: PipelineConfig) -> bytes:
    return json.dumps(config.to_json_dict(), sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )


def _f32_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise BundleError(f"truncated bundle {self.source}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def f32_array(self, count: int, shape: tuple[int, ...]) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4").reshape(shape)

    def done(self) -> None:
        if self.pos != len(self.data):
            raise BundleError(f"trailing data in bundle {self.source}")


def save_bundle(bundle: ModelBundle, path: str | Path) -> None:
    parts: list[bytes] = [BUNDLE_MAGIC, struct.pack("<I", BUNDLE_VERSION)]
    cfg = _canonical_config_bytes(bundle.config)
    parts.append(struct.pack("<I", len(cfg)))
    parts.append(cfg)

    if bundle.pca is None:
        parts.append(struct.pack("<I", 0))
    else:
        pca = bundle.pca
        parts.append(struct.pack("<IIII", 1, pca.input_dim, pca.output_dim, int(pca.whiten)))
        parts.append(_f32_bytes(pca.mean))
        parts.append(_f32_bytes(pca.projection))
        if pca.whiten:
            parts.append(_f32_bytes(pca.scales))

    if bundle.codebook is None:
        parts.append(struct.pack("<I", 0))
    else:
        cb = bundle.codebook
        parts.append(struct.pack("<III", 1, cb.k, cb.dim))
        parts.append(_f32_bytes(cb.centroids))

    svm = bundle.svm
    parts.append(struct.pack("<I", len(svm.classes)))
    for name in svm.classes:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
    parts.append(struct.pack("<If", svm.feature_dim, svm.regularization_c))
    parts.append(_f32_bytes(svm.weights))
    parts.append(_f32_bytes(svm.biases))

    Path(path).write_bytes(b"".join(parts))


def load_bundle(path: str | Path) -> ModelBundle:
    path = Path(path)
    reader = _Reader(path.read_bytes(), str(path))
    if reader.take(4) != BUNDLE_MAGIC:
        raise BundleError(f"bad bundle magic in {path}")
    version = reader.u32()
    if version != BUNDLE_VERSION:
        raise BundleError(f"unsupported bundle version {version} in {path}")
    try:
        config = PipelineConfig.from_json_dict(json.loads(reader.take(reader.u32())))
    except (json.JSONDecodeError, ValueError) as exc:
        raise BundleError(f"bad config section in {path}: {exc}") from exc

    pca = None
    if reader.u32():
        input_dim, output_dim, whiten = reader.u32(), reader.u32(), reader.u32()
        mean = reader.f32_array(input_dim, (input_dim,))
        projection = reader.f32_array(output_dim * input_dim, (output_dim, input_dim))
        scales = reader.f32_array(output_dim, (output_dim,)) if whiten else None
        try:
            pca = PcaModel(mean=mean, projection=projection, whiten=bool(whiten), scales=scales)
        except ValueError as exc:
            raise BundleError(f"bad PCA section in {path}: {exc}") from exc

    codebook = None
    if reader.u32():
        k, dim = reader.u32(), reader.u32()
        try:
            codebook = Codebook(centroids=reader.f32_array(k * dim, (k, dim)))
        except ValueError as exc:
            raise BundleError(f"bad codebook section in {path}: {exc}") from exc

    n_classes = reader.u32()
    names = [reader.take(reader.u32()).decode("utf-8") for _ in range(n_classes)]
    feature_dim, reg_c = struct.unpack("<If", reader.take(8))
    weights = reader.f32_array(n_classes * feature_dim, (n_classes, feature_dim))
    biases = reader.f32_array(n_classes, (n_classes,))
    reader.done()
    try:
        svm = LinearSvmModel(
            classes=tuple(names), weights=weights, biases=biases, regularization_c=reg_c
        )
        return ModelBundle(config=config, pca=pca, codebook=codebook, svm=svm)
    except ValueError as exc:
        raise BundleError(f"inconsistent bundle {path}: {exc}") from exc


def write_code_file(values: np.ndarray, path: str | Path) -> None:
    """Write a code vector: uint32 length then float32 values."""
    flat = np.asarray(values, dtype=np.float64).ravel()
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", flat.shape[0]))
        fh.write(_f32_bytes(flat))


def read_code_file(path: str | Path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 4:
        raise BundleError(f"truncated code file {path}")
    (length,) = struct.unpack_from("<I", data)
    if len(data) != 4 + 4 * length:
        raise BundleError(f"code file {path} length mismatch")
    return np.frombuffer(data, dtype="<f4", offset=4).astype(np.float64)
