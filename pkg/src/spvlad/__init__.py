"""Spatial-pyramid VLAD image codes over region descriptors.

The library aggregates per-region feature vectors into compact image codes
(plain VLAD or spatial-pyramid VLAD over PCA-reduced descriptors) and
classifies them with a one-vs-rest linear SVM. See the CLI in
``spvlad.cli`` for the end-to-end commands.
"""

from .bundle import (
    BundleError,
    ModelBundle,
    load_bundle,
    read_code_file,
    save_bundle,
    write_code_file,
)
from .codebook import Codebook, assign_all, assign_nearest, distortion, kmeans_fit
from .config import PipelineConfig, parse_pyramid
from .descriptors import (
    DatasetManifest,
    DescriptorFileError,
    DescriptorSet,
    ManifestEntry,
    ManifestError,
    RegionBox,
    descriptor_file_size,
    load_manifest,
    read_descriptor_file,
    save_manifest,
    write_descriptor_file,
)
from .pca import PcaModel, pca_fit, pca_transform
from .pipeline import (
    EvaluationReport,
    PipelineError,
    ablation_table,
    encode_image,
    evaluate,
    pairwise_accuracy,
    predict_image,
    resplit_manifest,
    run_ablation,
    train_pipeline,
)
from .pyramid import PyramidSpec, SpVladCode, assign_cell, sp_vlad_encode
from .svm import (
    LinearSvmModel,
    hinge_objective,
    svm_predict,
    svm_scores,
    svm_train,
)
from .synthetic import SyntheticDataset, generate_synthetic_dataset
from .vlad import NormalizationScheme, VladCode, normalize, vlad_encode

__version__ = "0.1.0"

__all__ = [
    "BundleError",
    "Codebook",
    "DatasetManifest",
    "DescriptorFileError",
    "DescriptorSet",
    "EvaluationReport",
    "LinearSvmModel",
    "ManifestEntry",
    "ManifestError",
    "ModelBundle",
    "NormalizationScheme",
    "PcaModel",
    "PipelineConfig",
    "PipelineError",
    "PyramidSpec",
    "RegionBox",
    "SpVladCode",
    "SyntheticDataset",
    "VladCode",
    "ablation_table",
    "assign_all",
    "assign_cell",
    "assign_nearest",
    "descriptor_file_size",
    "distortion",
    "encode_image",
    "evaluate",
    "generate_synthetic_dataset",
    "hinge_objective",
    "kmeans_fit",
    "load_bundle",
    "load_manifest",
    "normalize",
    "pairwise_accuracy",
    "parse_pyramid",
    "pca_fit",
    "pca_transform",
    "predict_image",
    "read_code_file",
    "read_descriptor_file",
    "resplit_manifest",
    "run_ablation",
    "save_bundle",
    "save_manifest",
    "sp_vlad_encode",
    "svm_predict",
    "svm_scores",
    "svm_train",
    "train_pipeline",
    "vlad_encode",
    "write_code_file",
    "write_descriptor_file",
]
