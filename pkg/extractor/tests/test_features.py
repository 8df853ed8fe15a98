"""Feature extraction: shapes, determinism, model registry errors."""

import numpy as np
import pytest

from spvlad_extractor import (
    ExtractorConfig,
    WeightsUnavailableError,
    edge_based_proposals,
    extract_features,
    load_model,
)
from tests.test_proposals import structured_image


def test_tiny_shape_and_determinism():
    img = structured_image(seed=1)
    props = edge_based_proposals(img, 3)[:3]
    config = ExtractorConfig(model_identifier="tiny", max_regions=3)
    a = extract_features(img, props, load_model(config))
    b = extract_features(img, props, load_model(config))
    assert a.shape == (3, 256)
    assert a.dtype == np.float32
    assert np.array_equal(a, b)


def test_tiny_seed_suffix_changes_weights():
    img = structured_image(seed=2)
    props = edge_based_proposals(img, 2)[:2]
    a = extract_features(img, props, load_model(ExtractorConfig(model_identifier="tiny:1")))
    b = extract_features(img, props, load_model(ExtractorConfig(model_identifier="tiny:2")))
    assert not np.array_equal(a, b)


def test_vgg16_untrained_fc6_contract():
    img = structured_image(seed=3)
    props = edge_based_proposals(img, 2)[:2]
    config = ExtractorConfig(model_identifier="vgg16_untrained", max_regions=2)
    feats = extract_features(img, props, load_model(config))
    assert feats.shape == (2, 4096)
    assert (feats >= 0).all()  # fc6 is taken post-ReLU


def test_pretrained_weights_unavailable_is_reported(monkeypatch):
    import torchvision

    def refuse(*args, **kwargs):
        raise RuntimeError("no network")

    monkeypatch.setattr(torchvision.models, "vgg16", refuse)
    with pytest.raises(WeightsUnavailableError, match="model weights unavailable"):
        load_model(ExtractorConfig(model_identifier="vgg16"))


def test_unknown_model_and_layer_rejected():
    with pytest.raises(ValueError, match="unknown model_identifier"):
        load_model(ExtractorConfig(model_identifier="resnet50"))
    with pytest.raises(ValueError, match="unknown feature_layer"):
        load_model(ExtractorConfig(model_identifier="tiny", feature_layer="fc7"))
    with pytest.raises(ValueError, match="unknown proposal_source"):
        ExtractorConfig(proposal_source="random")
