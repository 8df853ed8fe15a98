"""Per-region convnet features.

Each proposal is cropped, resized to the network's input size, and pushed
through the model; the configured fully-connected layer's activation is one
descriptor row. Supported model identifiers:

    vgg16              torchvision VGG16 with ImageNet weights (downloads or
                       uses the local torch cache; raises
                       WeightsUnavailableError when neither works)
    vgg16_untrained    same architecture, seeded deterministic init
    tiny               small seeded convnet (256-dim head, 64px input);
                       fast and dependency-light, for tests and smoke runs

An optional ":<seed>" suffix on the seeded identifiers picks the init seed.
Feature layers: "fc6" (first fully-connected, 4096-dim on VGG16) and, for
the VGG variants, "fc7". All forward passes run on CPU in eval mode with
gradients disabled; fixed weights make re-runs bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np
import torch
from torch import nn

BATCH_SIZE = 16
_IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


class WeightsUnavailableError(RuntimeError):
    """Pretrained model weights could not be obtained."""


@dataclass(frozen=True)
class ExtractorConfig:
    proposal_source: str = "edge_based"
    max_regions: int = 1000
    feature_layer: str = "fc6"
    model_identifier: str = "vgg16"

    def __post_init__(self):
        if self.proposal_source not in ("edge_based", "sliding_grid"):
            raise ValueError(
                f"unknown proposal_source '{self.proposal_source}'; "
                "expected 'edge_based' or 'sliding_grid'"
            )
        if self.max_regions < 1:
            raise ValueError("max_regions must be at least 1")


@dataclass(frozen=True)
class FeatureModel:
    network: nn.Module
    input_size: int
    feature_dim: int
    normalize_imagenet: bool


def _vgg16_head(model, feature_layer: str) -> nn.Module:
    # classifier = [fc6, relu, dropout, fc7, relu, dropout, fc8]
    if feature_layer == "fc6":
        cut = 2
    elif feature_layer == "fc7":
        cut = 5
    else:
        raise ValueError(f"unknown feature_layer '{feature_layer}' for vgg16")
    return nn.Sequential(
        model.features, model.avgpool, nn.Flatten(), model.classifier[:cut]
    )


def _build_vgg16(pretrained: bool, seed: int, feature_layer: str) -> FeatureModel:
    import torchvision

    if pretrained:
        try:
            model = torchvision.models.vgg16(
                weights=torchvision.models.VGG16_Weights.IMAGENET1K_V1
            )
        except Exception as exc:
            raise WeightsUnavailableError(
                f"model weights unavailable for vgg16: {exc}"
            ) from exc
    else:
        torch.manual_seed(seed)
        model = torchvision.models.vgg16(weights=None)
    network = _vgg16_head(model, feature_layer).eval()
    return FeatureModel(network=network, input_size=224, feature_dim=4096,
                        normalize_imagenet=True)


def _build_tiny(seed: int, feature_layer: str) -> FeatureModel:
    if feature_layer != "fc6":
        raise ValueError(f"unknown feature_layer '{feature_layer}' for tiny")
    torch.manual_seed(seed)
    network = nn.Sequential(
        nn.Conv2d(3, 16, kernel_size=5, stride=4, padding=2),
        nn.ReLU(),
        nn.Conv2d(16, 32, kernel_size=3, stride=2, padding=1),
        nn.ReLU(),
        nn.AdaptiveAvgPool2d(4),
        nn.Flatten(),
        nn.Linear(32 * 16, 256),
        nn.ReLU(),
    ).eval()
    return FeatureModel(network=network, input_size=64, feature_dim=256,
                        normalize_imagenet=False)


def load_model(config: ExtractorConfig) -> FeatureModel:
    name, _, seed_part = config.model_identifier.partition(":")
    seed = int(seed_part) if seed_part else 0
    if name == "vgg16":
        return _build_vgg16(pretrained=True, seed=seed, feature_layer=config.feature_layer)
    if name == "vgg16_untrained":
        return _build_vgg16(pretrained=False, seed=seed, feature_layer=config.feature_layer)
    if name == "tiny":
        return _build_tiny(seed=seed, feature_layer=config.feature_layer)
    raise ValueError(f"unknown model_identifier '{config.model_identifier}'")


def _crop(image: np.ndarray, x: float, y: float, w: float, h: float) -> np.ndarray:
    height, width = image.shape[:2]
    x0 = min(max(int(np.floor(x)), 0), width - 1)
    y0 = min(max(int(np.floor(y)), 0), height - 1)
    x1 = min(max(int(np.ceil(x + w)), x0 + 1), width)
    y1 = min(max(int(np.ceil(y + h)), y0 + 1), height)
    return image[y0:y1, x0:x1]


def extract_features(image: np.ndarray, boxes, model: FeatureModel) -> np.ndarray:
    """One descriptor row per box; rows in box order; float32."""
    if image.ndim == 2:
        image = cv2.cvtColor(image, cv2.COLOR_GRAY2BGR)
    rgb = cv2.cvtColor(image, cv2.COLOR_BGR2RGB)
    size = model.input_size

    crops = []
    for box in boxes:
        patch = _crop(rgb, box.x, box.y, box.w, box.h)
        patch = cv2.resize(patch, (size, size), interpolation=cv2.INTER_AREA)
        patch = patch.astype(np.float32) / 255.0
        if model.normalize_imagenet:
            patch = (patch - _IMAGENET_MEAN) / _IMAGENET_STD
        crops.append(patch.transpose(2, 0, 1))

    rows = []
    with torch.no_grad():
        for start in range(0, len(crops), BATCH_SIZE):
            batch = torch.from_numpy(np.stack(crops[start : start + BATCH_SIZE]))
            rows.append(model.network(batch).numpy())
    if not rows:
        return np.zeros((0, model.feature_dim), dtype=np.float32)
    out = np.concatenate(rows).astype(np.float32)
    if out.shape[1] != model.feature_dim:
        raise RuntimeError(
            f"feature layer produced dim {out.shape[1]}, expected {model.feature_dim}"
        )
    return out
