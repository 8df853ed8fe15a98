"""Region proposals + convnet features, exported as spvlad descriptor files."""

from .export import export, export_batch, find_images, propose, write_descriptor_file
from .features import (
    ExtractorConfig,
    FeatureModel,
    WeightsUnavailableError,
    extract_features,
    load_model,
)
from .proposals import Proposal, edge_based_proposals, sliding_grid_proposals

__version__ = "0.1.0"

__all__ = [
    "ExtractorConfig",
    "FeatureModel",
    "Proposal",
    "WeightsUnavailableError",
    "edge_based_proposals",
    "export",
    "export_batch",
    "extract_features",
    "find_images",
    "load_model",
    "propose",
    "sliding_grid_proposals",
    "write_descriptor_file",
]
