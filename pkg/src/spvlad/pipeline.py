"""End-to-end orchestration: train, encode, evaluate, and the setting ablation.

Three encoder settings are supported. ``raw_features`` classifies each
image's single global descriptor directly (for multi-region files the
capped rows are mean-pooled as the global stand-in). ``vlad`` reduces
region descriptors with PCA and aggregates them into one residual code.
``sp_vlad`` additionally splits regions across pyramid cells before
aggregation. Every stage is seeded, so a full run is a pure function of
(manifest contents, config).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bundle import ModelBundle
from .codebook import kmeans_fit
from .config import SETTINGS, PipelineConfig
from .descriptors import (
    DatasetManifest,
    DescriptorSet,
    ManifestEntry,
    read_descriptor_file,
)
from .pca import pca_fit, pca_transform
from .pyramid import sp_vlad_encode
from .svm import svm_predict, svm_train
from .vlad import normalize, vlad_encode


class PipelineError(ValueError):
    """Data-level pipeline failure: missing files, inconsistent dimensions, bad splits."""


@dataclass(frozen=True)
class EvaluationReport:
    """Test-split outcome: accuracy plus a row-normalized confusion matrix."""

    classes: tuple[str, ...]
    accuracy: float
    confusion: np.ndarray
    confusion_counts: np.ndarray
    per_class_counts: dict[str, int]
    config: PipelineConfig

    def __post_init__(self):
        counts = np.asarray(self.confusion_counts, dtype=np.int64)
        rates = np.asarray(self.confusion, dtype=np.float64)
        n = len(self.classes)
        if counts.shape != (n, n) or rates.shape != (n, n):
            raise ValueError("confusion matrices must be classes x classes")
        row_sums = rates.sum(axis=1)
        present = counts.sum(axis=1) > 0
        if not np.allclose(row_sums[present], 1.0, atol=1e-6):
            raise ValueError("confusion rows must sum to 1")
        if row_sums[~present].any():
            raise ValueError("confusion rows for absent classes must be zero")
        total = counts.sum()
        if total == 0:
            raise ValueError("report needs at least one test item")
        if abs(self.accuracy - np.trace(counts) / total) > 1e-9:
            raise ValueError("accuracy inconsistent with confusion counts")
        object.__setattr__(self, "confusion", rates)
        object.__setattr__(self, "confusion_counts", counts)

    def to_json_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
            "confusion_counts": self.confusion_counts.tolist(),
            "per_class_counts": dict(self.per_class_counts),
            "config": self.config.to_json_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        name_w = max(len(c) for c in self.classes)
        lines = [f"accuracy: {self.accuracy:.4f}", ""]
        header = " " * (name_w + 2) + "  ".join(f"{c[:8]:>8}" for c in self.classes)
        lines.append(header)
        for i, cls in enumerate(self.classes):
            row = "  ".join(f"{v:8.2f}" for v in self.confusion[i])
            lines.append(f"{cls:<{name_w}}  {row}")
        return "\n".join(lines) + "\n"


def _load_set(manifest: DatasetManifest, entry: ManifestEntry, region_cap: int) -> DescriptorSet:
    path = manifest.resolve(entry)
    if not path.exists():
        raise PipelineError(
            f"missing descriptor file {path} for image '{entry.image_id}'"
        )
    return read_descriptor_file(path, image_id=entry.image_id).capped(region_cap)


def _global_descriptor(dset: DescriptorSet) -> np.ndarray:
    """The image-level feature for the raw setting.

    Single-region files supply it directly; multi-region files are
    mean-pooled; empty files contribute a zero vector.
    """
    mat = np.asarray(dset.descriptors, dtype=np.float64)
    if mat.shape[0] == 0:
        return np.zeros(mat.shape[1], dtype=np.float64)
    if mat.shape[0] == 1:
        return mat[0]
    return mat.mean(axis=0)


def _encode(
    config: PipelineConfig,
    pca,
    codebook,
    dset: DescriptorSet,
) -> np.ndarray:
    capped = dset.capped(config.region_cap)
    if config.setting == "raw_features":
        return _global_descriptor(capped)
    reduced = pca_transform(pca, capped.descriptors)
    if config.setting == "vlad":
        return normalize(vlad_encode(reduced, codebook), config.normalization).values
    return sp_vlad_encode(
        capped.with_descriptors(reduced), codebook, config.pyramid, config.normalization
    ).values


def train_pipeline(manifest: DatasetManifest, config: PipelineConfig) -> ModelBundle:
    """Fit PCA, codebook, and SVM on the manifest's train split."""
    train_entries = manifest.split_entries("train")
    if not train_entries:
        raise PipelineError("manifest has no train entries")
    per_label: dict[str, int] = {}
    for e in train_entries:
        per_label[e.label] = per_label.get(e.label, 0) + 1
    thin = sorted(label for label, n in per_label.items() if n < 2)
    if thin:
        raise PipelineError(f"too few train images (< 2) for classes: {thin}")
    if len(per_label) < 2:
        raise PipelineError("training needs at least 2 classes")

    sets = [_load_set(manifest, e, config.region_cap) for e in train_entries]
    dims = sorted({s.dim for s in sets})
    if len(dims) != 1:
        raise PipelineError(f"inconsistent descriptor dims across train files: {dims}")
    labels = [e.label for e in train_entries]

    pca = codebook = None
    if config.setting != "raw_features":
        # float32 here: the pool can be large and pca_fit upcasts internally
        pool = np.concatenate([np.asarray(s.descriptors, dtype=np.float32) for s in sets])
        if config.pca_output_dim > dims[0]:
            raise PipelineError(
                f"pca_output_dim {config.pca_output_dim} exceeds descriptor dim {dims[0]}"
            )
        pca = pca_fit(
            pool, config.pca_output_dim, sample_cap=config.pca_sample_cap, seed=config.seed
        )
        reduced_pool = np.concatenate([pca_transform(pca, s.descriptors) for s in sets])
        codebook = kmeans_fit(reduced_pool, config.k, seed=config.seed)

    features = np.stack([_encode(config, pca, codebook, s) for s in sets])
    svm = svm_train(features, labels, c=config.svm_c, seed=config.seed)
    return ModelBundle(config=config, pca=pca, codebook=codebook, svm=svm)


def encode_image(bundle: ModelBundle, dset: DescriptorSet) -> np.ndarray:
    """Deterministically encode one descriptor set with a fitted bundle."""
    if bundle.config.setting != "raw_features" and dset.dim != bundle.pca.input_dim:
        raise PipelineError(
            f"dimension mismatch: descriptors have dim {dset.dim}, "
            f"bundle expects {bundle.pca.input_dim}"
        )
    code = _encode(bundle.config, bundle.pca, bundle.codebook, dset)
    if code.shape[0] != bundle.svm.feature_dim:
        raise PipelineError(
            f"dimension mismatch: code length {code.shape[0]}, "
            f"classifier expects {bundle.svm.feature_dim}"
        )
    return code


def predict_image(bundle: ModelBundle, dset: DescriptorSet) -> str:
    return svm_predict(bundle.svm, encode_image(bundle, dset))


def evaluate(bundle: ModelBundle, manifest: DatasetManifest) -> EvaluationReport:
    """Predict every test entry and tabulate the confusion matrix."""
    test_entries = manifest.split_entries("test")
    if not test_entries:
        raise PipelineError("manifest has no test entries")
    classes = bundle.svm.classes
    index = {c: i for i, c in enumerate(classes)}
    missing = sorted({e.label for e in test_entries} - set(classes))
    if missing:
        raise PipelineError(f"test classes absent from model: {missing}")

    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for e in test_entries:
        dset = _load_set(manifest, e, bundle.config.region_cap)
        pred = predict_image(bundle, dset)
        counts[index[e.label], index[pred]] += 1

    row_totals = counts.sum(axis=1)
    rates = np.zeros_like(counts, dtype=np.float64)
    present = row_totals > 0
    rates[present] = counts[present] / row_totals[present, None]
    accuracy = float(np.trace(counts) / counts.sum())
    per_class = {c: int(row_totals[i]) for i, c in enumerate(classes)}
    return EvaluationReport(
        classes=classes,
        accuracy=accuracy,
        confusion=rates,
        confusion_counts=counts,
        per_class_counts=per_class,
        config=bundle.config,
    )


def pairwise_accuracy(report: EvaluationReport, class_a: str, class_b: str) -> float:
    """Accuracy restricted to test items whose true class is one of the pair."""
    for c in (class_a, class_b):
        if c not in report.classes:
            raise ValueError(f"class '{c}' not in report")
    ia, ib = report.classes.index(class_a), report.classes.index(class_b)
    counts = report.confusion_counts
    denom = counts[ia].sum() + counts[ib].sum()
    if denom == 0:
        raise ValueError(f"no test items for pair ({class_a}, {class_b})")
    return float((counts[ia, ia] + counts[ib, ib]) / denom)


def resplit_manifest(
    manifest: DatasetManifest, train_fraction: float = 0.675, seed: int = 42
) -> DatasetManifest:
    """Reassign splits per class at the given fraction, preserving entry order."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    by_label: dict[str, list[int]] = {}
    for i, e in enumerate(manifest.entries):
        by_label.setdefault(e.label, []).append(i)
    split_of = {}
    for label in sorted(by_label):
        idxs = np.array(by_label[label])
        order = rng.permutation(len(idxs))
        n_train = max(1, min(len(idxs) - 1, int(len(idxs) * train_fraction + 0.5)))
        chosen = set(idxs[order[:n_train]].tolist())
        for i in idxs:
            split_of[int(i)] = "train" if int(i) in chosen else "test"
    entries = tuple(
        ManifestEntry(e.image_id, e.path, e.label, split_of[i])
        for i, e in enumerate(manifest.entries)
    )
    return DatasetManifest(entries=entries, root=manifest.root)


def run_ablation(
    manifest: DatasetManifest, base_config: PipelineConfig
) -> list[tuple[str, ModelBundle, EvaluationReport]]:
    """Train and evaluate every setting on the same manifest."""
    results = []
    for setting in SETTINGS:
        config = base_config.with_setting(setting)
        bundle = train_pipeline(manifest, config)
        results.append((setting, bundle, evaluate(bundle, manifest)))
    return results


def ablation_table(results: list[tuple[str, ModelBundle, EvaluationReport]]) -> str:
    lines = [f"{'setting':<14}{'code dim':>10}{'accuracy':>10}"]
    for setting, bundle, report in results:
        lines.append(f"{setting:<14}{bundle.svm.feature_dim:>10}{report.accuracy:>10.4f}")
    return "\n".join(lines) + "\n"
