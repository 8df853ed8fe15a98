"""Region descriptor sets, dataset manifests, and their file formats.

A descriptor file holds everything one image contributes to the pipeline:
the region boxes proposed on the image and one feature row per region.
The binary layout (little-endian throughout) is:

    bytes 0-3    magic "VLDS"
    bytes 4-7    format version, uint32 (currently 1)
    bytes 8-11   feature dimension, uint32
    bytes 12-15  region count, uint32
    bytes 16-19  image width in pixels, uint32
    bytes 20-23  image height in pixels, uint32
    bytes 24-27  reserved, uint32 (must be 0)
    then         region count x 4 float32: x, y, w, h per region
    then         region count x dim float32, row-major

Descriptors are float32 on disk; files written from float32 data round-trip
bit-exactly. A manifest is JSON-lines, one object per image with keys
"id", "path", "label", "split".
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"VLDS"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIIIIII")
HEADER_SIZE = HEADER.size  # 28
REGION_RECORD_SIZE = 16
VALID_SPLITS = ("train", "test")


class DescriptorFileError(ValueError):
    """A descriptor file is malformed or violates a format invariant."""


class ManifestError(ValueError):
    """A manifest file is malformed or violates a manifest invariant."""


def descriptor_file_size(region_count: int, dim: int) -> int:
    """Exact on-disk size in bytes of a file with the given shape."""
    return HEADER_SIZE + REGION_RECORD_SIZE * region_count + 4 * region_count * dim


@dataclass(frozen=True)
class RegionBox:
    """Axis-aligned box in absolute pixels: top-left corner plus size."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"region {name} must be finite, got {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"region size must be positive, got w={self.w}, h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"region origin must be non-negative, got x={self.x}, y={self.y}")

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class DescriptorSet:
    """All region descriptors and geometry for a single image.

    ``descriptors`` is a (region count, dim) matrix, row i belonging to
    ``regions[i]``. Instances are immutable; derived sets (capped, reduced)
    are produced by the helper methods.
    """

    image_id: str
    image_width: int
    image_height: int
    regions: tuple[RegionBox, ...]
    descriptors: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.descriptors)
        if mat.ndim != 2:
            raise ValueError(f"descriptors must be 2-D, got shape {mat.shape}")
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image extent must be positive")
        if len(self.regions) != mat.shape[0]:
            raise ValueError(
                f"region/row-count mismatch: {len(self.regions)} regions, "
                f"{mat.shape[0]} descriptor rows"
            )
        if mat.size and not np.isfinite(mat).all():
            raise ValueError("non-finite descriptor values")
        for i, region in enumerate(self.regions):
            cx, cy = region.center()
            if not (0 <= cx < self.image_width and 0 <= cy < self.image_height):
                raise ValueError(
                    f"region {i} center ({cx}, {cy}) outside image extent "
                    f"{self.image_width}x{self.image_height}"
                )
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "descriptors", mat)

    @property
    def dim(self) -> int:
        return self.descriptors.shape[1]

    @property
    def region_count(self) -> int:
        return len(self.regions)

    def capped(self, max_regions: int) -> "DescriptorSet":
        """Keep the first ``max_regions`` regions (file order)."""
        if max_regions < 1:
            raise ValueError("max_regions must be positive")
        if self.region_count <= max_regions:
            return self
        return DescriptorSet(
            image_id=self.image_id,
            image_width=self.image_width,
            image_height=self.image_height,
            regions=self.regions[:max_regions],
            descriptors=self.descriptors[:max_regions],
        )

    def with_descriptors(self, matrix: np.ndarray) -> "DescriptorSet":
        """Same geometry, new descriptor rows (e.g. after dimensionality reduction)."""
        return DescriptorSet(
            image_id=self.image_id,
            image_width=self.image_width,
            image_height=self.image_height,
            regions=self.regions,
            descriptors=matrix,
        )

    def allclose(self, other: "DescriptorSet", atol: float = 0.0) -> bool:
        return (
            self.image_width == other.image_width
            and self.image_height == other.image_height
            and self.regions == other.regions
            and self.descriptors.shape == other.descriptors.shape
            and np.allclose(self.descriptors, other.descriptors, rtol=0.0, atol=atol)
        )


def write_descriptor_file(dset: DescriptorSet, path: str | Path) -> None:
    """Serialize ``dset`` to ``path`` in the binary layout above."""
    header = HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        dset.dim,
        dset.region_count,
        dset.image_width,
        dset.image_height,
        0,
    )
    boxes = np.array(
        [(r.x, r.y, r.w, r.h) for r in dset.regions], dtype="<f4"
    ).reshape(dset.region_count, 4)
    rows = np.ascontiguousarray(dset.descriptors, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(boxes.tobytes())
        fh.write(rows.tobytes())


def read_descriptor_file(path: str | Path, image_id: str | None = None) -> DescriptorSet:
    """Parse a descriptor file, validating all format and set invariants.

    The file carries no image id; by default the filename stem is used.
    """
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise DescriptorFileError(f"bad magic in {path}: expected {MAGIC!r}")
    if len(data) < HEADER_SIZE:
        raise DescriptorFileError(f"truncated payload in {path}: incomplete header")
    _, version, dim, count, width, height, reserved = HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise DescriptorFileError(f"unsupported version {version} in {path}")
    if reserved != 0:
        raise DescriptorFileError(f"nonzero reserved field in {path}")
    expected = descriptor_file_size(count, dim)
    if len(data) < expected:
        raise DescriptorFileError(
            f"truncated payload in {path}: {len(data)} bytes, expected {expected}"
        )
    if len(data) > expected:
        raise DescriptorFileError(
            f"trailing data in {path}: {len(data)} bytes, expected {expected}"
        )
    boxes = np.frombuffer(data, dtype="<f4", count=count * 4, offset=HEADER_SIZE)
    boxes = boxes.reshape(count, 4).astype(np.float64)
    mat = np.frombuffer(
        data, dtype="<f4", count=count * dim, offset=HEADER_SIZE + REGION_RECORD_SIZE * count
    ).reshape(count, dim)
    if not np.isfinite(boxes).all():
        raise DescriptorFileError(f"non-finite region geometry in {path}")
    if mat.size and not np.isfinite(mat).all():
        raise DescriptorFileError(f"non-finite descriptor values in {path}")
    try:
        regions = tuple(RegionBox(*row) for row in boxes)
        return DescriptorSet(
            image_id=image_id if image_id is not None else path.stem,
            image_width=int(width),
            image_height=int(height),
            regions=regions,
            descriptors=mat,
        )
    except ValueError as exc:
        raise DescriptorFileError(f"invalid contents in {path}: {exc}") from exc


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    path: str
    label: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    """Ordered dataset listing; entry order is exactly the file order."""

    entries: tuple[ManifestEntry, ...]
    root: Path

    def __post_init__(self):
        entries = tuple(self.entries)
        ids = [e.image_id for e in entries]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ManifestError(f"duplicate image ids: {dup}")
        train_labels = {e.label for e in entries if e.split == "train"}
        orphans = sorted({e.label for e in entries} - train_labels)
        if orphans:
            raise ManifestError(f"labels with no train entry: {orphans}")
        for e in entries:
            if e.split not in VALID_SPLITS:
                raise ManifestError(f"unknown split '{e.split}' for image '{e.image_id}'")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "root", Path(self.root))

    def labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.label)
        return tuple(seen)

    def split_entries(self, split: str) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.split == split)

    def resolve(self, entry: ManifestEntry) -> Path:
        """Descriptor file path, relative paths taken against the manifest dir."""
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p


def _validate_entries(entries: list[tuple[int, ManifestEntry]]) -> None:
    seen: dict[str, int] = {}
    for lineno, entry in entries:
        if entry.image_id in seen:
            raise ManifestError(
                f"duplicate image id '{entry.image_id}' on lines "
                f"{seen[entry.image_id]} and {lineno}"
            )
        seen[entry.image_id] = lineno
    train_labels = {e.label for _, e in entries if e.split == "train"}
    for lineno, entry in entries:
        if entry.label not in train_labels:
            raise ManifestError(
                f"label '{entry.label}' (line {lineno}) has no train entry"
            )


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse a JSON-lines manifest, rejecting malformed or inconsistent files."""
    path = Path(path)
    entries: list[tuple[int, ManifestEntry]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"malformed line {lineno}: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"malformed line {lineno}: expected a JSON object")
            missing = [k for k in ("id", "path", "label", "split") if k not in obj]
            if missing:
                raise ManifestError(f"malformed line {lineno}: missing keys {missing}")
            if not all(isinstance(obj[k], str) for k in ("id", "path", "label", "split")):
                raise ManifestError(f"malformed line {lineno}: all fields must be strings")
            if obj["split"] not in VALID_SPLITS:
                raise ManifestError(
                    f"unknown split '{obj['split']}' on line {lineno}; "
                    f"expected one of {list(VALID_SPLITS)}"
                )
            entries.append(
                (lineno, ManifestEntry(obj["id"], obj["path"], obj["label"], obj["split"]))
            )
    _validate_entries(entries)
    return DatasetManifest(entries=tuple(e for _, e in entries), root=path.parent)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in manifest.entries:
            fh.write(
                json.dumps(
                    {"id": e.image_id, "path": e.path, "label": e.label, "split": e.split}
                )
                + "\n"
            )
