"""Export images as descriptor files plus a manifest fragment.

The on-disk layout is the spvlad descriptor format (little-endian): magic
"VLDS", version 1, dim, region count, image width, image height, reserved
(uint32 each), then x/y/w/h float32 per region, then the count x dim
float32 feature matrix row-major. Regions are written in proposal order,
which for edge_based means descending confidence, so a downstream region
cap keeps the top-ranked boxes.

The manifest fragment is JSON-lines with "id", "path", and "label" (the
image's parent directory name, or "unlabeled"); consumers assign "split"
before feeding it to the classifier pipeline.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import cv2
import numpy as np

from .features import ExtractorConfig, FeatureModel, extract_features, load_model
from .proposals import Proposal, edge_based_proposals, sliding_grid_proposals

_HEADER = struct.Struct("<4sIIIIII")
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


def write_descriptor_file(
    path: str | Path,
    image_width: int,
    image_height: int,
    proposals: list[Proposal],
    features: np.ndarray,
) -> None:
    features = np.ascontiguousarray(features, dtype="<f4")
    count, dim = features.shape
    if count != len(proposals):
        raise ValueError(f"{len(proposals)} proposals for {count} feature rows")
    boxes = np.array([(p.x, p.y, p.w, p.h) for p in proposals], dtype="<f4").reshape(
        count, 4
    )
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"VLDS", 1, dim, count, image_width, image_height, 0))
        fh.write(boxes.tobytes())
        fh.write(features.tobytes())


def propose(image: np.ndarray, config: ExtractorConfig) -> list[Proposal]:
    height, width = image.shape[:2]
    if config.proposal_source == "edge_based":
        return edge_based_proposals(image, config.max_regions)
    return sliding_grid_proposals(width, height, config.max_regions)


def export(
    image_path: str | Path,
    config: ExtractorConfig,
    out_path: str | Path,
    model: FeatureModel | None = None,
) -> int:
    """Extract one image to a descriptor file; returns the region count."""
    image = cv2.imread(str(image_path), cv2.IMREAD_COLOR)
    if image is None:
        raise ValueError(f"undecodable image: {image_path}")
    if model is None:
        model = load_model(config)
    proposals = propose(image, config)
    features = extract_features(image, proposals, model)
    height, width = image.shape[:2]
    write_descriptor_file(out_path, width, height, proposals, features)
    return len(proposals)


def find_images(image_dir: Path) -> list[Path]:
    return sorted(
        p for p in image_dir.rglob("*") if p.suffix.lower() in IMAGE_SUFFIXES
    )


def export_batch(
    image_dir: str | Path, out_dir: str | Path, config: ExtractorConfig
) -> Path:
    """Extract every image under ``image_dir``; returns the fragment path.

    Labels come from each image's parent directory when it is a subdirectory
    of ``image_dir``, else "unlabeled". Files are processed in sorted order,
    so a re-run with the same weights is byte-identical.
    """
    image_dir = Path(image_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = find_images(image_dir)
    if not images:
        raise ValueError(f"no images found under {image_dir}")
    model = load_model(config)

    fragment_path = out_dir / "manifest.fragment.jsonl"
    with open(fragment_path, "w", encoding="utf-8") as fragment:
        for image_path in images:
            rel = image_path.relative_to(image_dir)
            label = rel.parts[0] if len(rel.parts) > 1 else "unlabeled"
            image_id = image_path.stem
            out_name = f"{image_id}.vlds"
            export(image_path, config, out_dir / out_name, model=model)
            fragment.write(
                json.dumps({"id": image_id, "path": out_name, "label": label}) + "\n"
            )
    return fragment_path
