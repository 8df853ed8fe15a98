"""Seeded synthetic datasets for exercising the pipeline end to end.

Each class draws region descriptors from its own Gaussian mixture, with
between-class mean separation far exceeding the within-component spread, so
even a nearest-class-mean rule classifies the plain setup almost perfectly.

With ``spatial_signal`` enabled, the first two class pairs are made
descriptor-identical: each pair shares one mixture, and the two classes
differ only in where their regions sit (top-left vs bottom-right quadrant).
Any encoder that ignores region geometry then carries no information about
which member of a pair an image belongs to, while a spatial-pyramid encoder
separates them cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .descriptors import (
    DatasetManifest,
    DescriptorSet,
    ManifestEntry,
    RegionBox,
    save_manifest,
    write_descriptor_file,
)

IMAGE_SIZE = (256, 256)
# Enough mixture components per class that a 16-word codebook stays coarser
# than any single class's mixture; a centroid landing dead-on one component
# would zero out that component's residual and destabilize its code.
COMPONENTS_PER_CLASS = 6
BETWEEN_CLASS_SCALE = 1.0
WITHIN_COMPONENT_SIGMA = 0.1
DEFAULT_TRAIN_FRACTION = 0.675
BOX_SIDE_RANGE = (4.0, 24.0)


@dataclass(frozen=True)
class SyntheticDataset:
    manifest_path: Path
    manifest: DatasetManifest
    class_names: tuple[str, ...]
    confusable_pairs: tuple[tuple[str, str], ...]


def _quadrant_bounds(which: str, width: int, height: int) -> tuple[float, float, float, float]:
    half_w, half_h = width / 2.0, height / 2.0
    if which == "top_left":
        return (0.0, half_w, 0.0, half_h)
    return (half_w, float(width), half_h, float(height))


def _draw_regions(
    rng: np.random.Generator,
    count: int,
    bounds: tuple[float, float, float, float],
) -> tuple[RegionBox, ...]:
    x_lo, x_hi, y_lo, y_hi = bounds
    sides = rng.uniform(BOX_SIDE_RANGE[0], BOX_SIDE_RANGE[1], size=(count, 2))
    boxes = []
    for w_raw, h_raw in sides:
        # Snap sizes to half pixels and centers to quarter pixels so every
        # stored float32 coordinate is exact and centers cannot drift across
        # a cell boundary through rounding. Boxes may overhang the
        # right/bottom image edge, which the format permits.
        w = np.round(w_raw * 2.0) / 2.0
        h = np.round(h_raw * 2.0) / 2.0
        cx = np.floor(rng.uniform(max(x_lo, w / 2.0), x_hi) * 4.0) / 4.0
        cy = np.floor(rng.uniform(max(y_lo, h / 2.0), y_hi) * 4.0) / 4.0
        boxes.append(RegionBox(x=cx - w / 2.0, y=cy - h / 2.0, w=w, h=h))
    return tuple(boxes)


def generate_synthetic_dataset(
    out_dir: str | Path,
    class_count: int = 10,
    images_per_class: int = 20,
    regions_per_image: int = 50,
    dim: int = 32,
    spatial_signal: bool = False,
    seed: int = 0,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
) -> SyntheticDataset:
    """Write descriptor files plus a manifest under ``out_dir``."""
    if min(class_count, images_per_class, regions_per_image, dim) < 1:
        raise ValueError("all counts must be positive")
    if spatial_signal and class_count < 4:
        raise ValueError("spatial_signal needs at least 4 classes (two pairs)")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    width, height = IMAGE_SIZE
    names = tuple(f"class_{i:02d}" for i in range(class_count))

    mixtures = [
        rng.normal(0.0, BETWEEN_CLASS_SCALE, size=(COMPONENTS_PER_CLASS, dim))
        for _ in range(class_count)
    ]
    placements: list[tuple[float, float, float, float]] = [
        (0.0, float(width), 0.0, float(height))
    ] * class_count
    pairs: tuple[tuple[str, str], ...] = ()
    if spatial_signal:
        # Paired classes share a mixture and differ only by region placement.
        mixtures[1] = mixtures[0]
        mixtures[3] = mixtures[2]
        placements = list(placements)
        placements[0] = _quadrant_bounds("top_left", width, height)
        placements[1] = _quadrant_bounds("bottom_right", width, height)
        placements[2] = _quadrant_bounds("top_left", width, height)
        placements[3] = _quadrant_bounds("bottom_right", width, height)
        pairs = ((names[0], names[1]), (names[2], names[3]))

    train_per_class = max(1, min(images_per_class - 1, int(images_per_class * train_fraction + 0.5)))
    entries: list[ManifestEntry] = []
    for ci, name in enumerate(names):
        for ii in range(images_per_class):
            image_id = f"{name}_img{ii:03d}"
            comp = rng.integers(0, COMPONENTS_PER_CLASS, size=regions_per_image)
            descriptors = mixtures[ci][comp] + rng.normal(
                0.0, WITHIN_COMPONENT_SIGMA, size=(regions_per_image, dim)
            )
            regions = _draw_regions(rng, regions_per_image, placements[ci])
            dset = DescriptorSet(
                image_id=image_id,
                image_width=width,
                image_height=height,
                regions=regions,
                descriptors=descriptors.astype(np.float32),
            )
            filename = f"{image_id}.vlds"
            write_descriptor_file(dset, out_dir / filename)
            split = "train" if ii < train_per_class else "test"
            entries.append(ManifestEntry(image_id, filename, name, split))

    manifest = DatasetManifest(entries=tuple(entries), root=out_dir)
    manifest_path = out_dir / "manifest.jsonl"
    save_manifest(manifest, manifest_path)
    return SyntheticDataset(
        manifest_path=manifest_path,
        manifest=manifest,
        class_names=names,
        confusable_pairs=pairs,
    )
