"""End-to-end pipeline: training, encoding, evaluation, bundles, generator."""

import numpy as np
import pytest

from spvlad import (
    BundleError,
    Codebook,
    DescriptorSet,
    LinearSvmModel,
    ModelBundle,
    NormalizationScheme,
    PipelineConfig,
    PipelineError,
    PyramidSpec,
    RegionBox,
    encode_image,
    evaluate,
    generate_synthetic_dataset,
    load_bundle,
    load_manifest,
    normalize,
    pairwise_accuracy,
    pca_transform,
    predict_image,
    read_code_file,
    read_descriptor_file,
    resplit_manifest,
    save_bundle,
    sp_vlad_encode,
    train_pipeline,
    vlad_encode,
    write_code_file,
)
from spvlad.pipeline import EvaluationReport


@pytest.fixture(scope="module")
def toy_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("toy")
    return generate_synthetic_dataset(
        out, class_count=3, images_per_class=6, regions_per_image=12, dim=8, seed=11
    )


@pytest.fixture(scope="module")
def toy_config():
    return PipelineConfig(setting="vlad", pca_output_dim=4, k=4, seed=42, region_cap=50)


@pytest.fixture(scope="module")
def toy_bundle(toy_dataset, toy_config):
    return train_pipeline(toy_dataset.manifest, toy_config)


def test_generator_writes_valid_files(tmp_path):
    ds = generate_synthetic_dataset(
        tmp_path, class_count=10, images_per_class=20, regions_per_image=50, dim=32, seed=7
    )
    assert len(ds.manifest.entries) == 200
    assert len(ds.manifest.labels()) == 10
    for entry in ds.manifest.entries[::37]:
        dset = read_descriptor_file(ds.manifest.resolve(entry))
        assert dset.region_count == 50
        assert dset.dim == 32
    reloaded = load_manifest(ds.manifest_path)
    assert reloaded.entries == ds.manifest.entries


def test_generator_nearest_class_mean_margin(tmp_path):
    # margin check: mean-of-descriptors with a nearest-class-mean rule is
    # already nearly perfect, so encoder + SVM has headroom over the 90% bar
    ds = generate_synthetic_dataset(
        tmp_path, class_count=6, images_per_class=10, regions_per_image=30, dim=16, seed=3
    )
    means, labels = [], []
    for entry in ds.manifest.entries:
        dset = read_descriptor_file(ds.manifest.resolve(entry))
        means.append(dset.descriptors.astype(np.float64).mean(axis=0))
        labels.append(entry.label)
    means = np.stack(means)
    train = [i for i, e in enumerate(ds.manifest.entries) if e.split == "train"]
    test = [i for i, e in enumerate(ds.manifest.entries) if e.split == "test"]
    class_means = {
        lbl: means[[i for i in train if labels[i] == lbl]].mean(axis=0)
        for lbl in ds.class_names
    }
    correct = 0
    for i in test:
        guess = min(class_means, key=lambda lbl: ((means[i] - class_means[lbl]) ** 2).sum())
        correct += guess == labels[i]
    assert correct / len(test) >= 0.9


def test_generator_spatial_signal_structure(tmp_path):
    ds = generate_synthetic_dataset(
        tmp_path,
        class_count=5,
        images_per_class=4,
        regions_per_image=10,
        dim=8,
        spatial_signal=True,
        seed=5,
    )
    assert ds.confusable_pairs == (("class_00", "class_01"), ("class_02", "class_03"))
    for entry in ds.manifest.entries:
        dset = read_descriptor_file(ds.manifest.resolve(entry))
        centers = np.array([r.center() for r in dset.regions])
        if entry.label in ("class_00", "class_02"):
            assert (centers < 128.0).all()
        elif entry.label in ("class_01", "class_03"):
            assert (centers >= 128.0).all()


def test_two_class_minimal_manifest(tmp_path):
    ds = generate_synthetic_dataset(
        tmp_path, class_count=2, images_per_class=3, regions_per_image=10, dim=8, seed=21
    )
    config = PipelineConfig(setting="vlad", pca_output_dim=2, k=2, seed=42)
    bundle = train_pipeline(ds.manifest, config)
    assert bundle.svm.feature_dim == 2 * 2
    correct = total = 0
    for entry in ds.manifest.split_entries("train"):
        dset = read_descriptor_file(ds.manifest.resolve(entry), image_id=entry.image_id)
        correct += predict_image(bundle, dset) == entry.label
        total += 1
    assert total == 4
    assert correct == total  # frozen outcome of the seeded instance


def test_trained_bundle_dimensions(toy_bundle, toy_config):
    assert toy_bundle.pca.input_dim == 8
    assert toy_bundle.pca.output_dim == 4
    assert toy_bundle.codebook.k == 4
    assert toy_bundle.svm.feature_dim == 4 * 4
    assert toy_bundle.expected_code_length() == 16


def test_small_manifest_classifies_own_training_set(toy_dataset, toy_bundle):
    correct = total = 0
    for entry in toy_dataset.manifest.split_entries("train"):
        dset = read_descriptor_file(
            toy_dataset.manifest.resolve(entry), image_id=entry.image_id
        )
        correct += predict_image(toy_bundle, dset) == entry.label
        total += 1
    assert total == 12
    assert correct == total  # frozen outcome of the seeded instance


def test_encode_is_deterministic_and_composes(toy_dataset, toy_bundle, toy_config):
    entry = toy_dataset.manifest.entries[0]
    dset = read_descriptor_file(toy_dataset.manifest.resolve(entry))
    a = encode_image(toy_bundle, dset)
    b = encode_image(toy_bundle, dset)
    assert np.array_equal(a, b)
    # composition oracle: region cap, then PCA, then VLAD, then normalization
    capped = dset.capped(toy_config.region_cap)
    reduced = pca_transform(toy_bundle.pca, capped.descriptors)
    composed = normalize(
        vlad_encode(reduced, toy_bundle.codebook), toy_config.normalization
    ).values
    assert np.array_equal(a, composed)


def test_sp_vlad_encode_image_composes(toy_dataset, toy_config):
    config = toy_config.with_setting("sp_vlad")
    bundle = train_pipeline(toy_dataset.manifest, config)
    entry = toy_dataset.manifest.entries[3]
    dset = read_descriptor_file(toy_dataset.manifest.resolve(entry))
    got = encode_image(bundle, dset)
    capped = dset.capped(config.region_cap)
    reduced = pca_transform(bundle.pca, capped.descriptors)
    composed = sp_vlad_encode(
        capped.with_descriptors(reduced), bundle.codebook, config.pyramid, config.normalization
    ).values
    assert np.array_equal(got, composed)


def test_empty_descriptor_set_is_classifiable(toy_bundle):
    empty = DescriptorSet(
        image_id="void",
        image_width=64,
        image_height=64,
        regions=(),
        descriptors=np.zeros((0, 8), dtype=np.float32),
    )
    code = encode_image(toy_bundle, empty)
    assert not code.any()
    assert predict_image(toy_bundle, empty) in toy_bundle.svm.classes


def test_region_cap_keeps_file_order(toy_dataset):
    config = PipelineConfig(setting="vlad", pca_output_dim=4, k=4, seed=42, region_cap=5)
    bundle = train_pipeline(toy_dataset.manifest, config)
    entry = toy_dataset.manifest.entries[1]
    dset = read_descriptor_file(toy_dataset.manifest.resolve(entry))
    truncated = DescriptorSet(
        image_id=dset.image_id,
        image_width=dset.image_width,
        image_height=dset.image_height,
        regions=dset.regions[:5],
        descriptors=dset.descriptors[:5],
    )
    assert np.array_equal(encode_image(bundle, dset), encode_image(bundle, truncated))


def test_missing_descriptor_file_is_reported(tmp_path, toy_dataset, toy_config):
    manifest = load_manifest(toy_dataset.manifest_path)
    broken = type(manifest)(
        entries=tuple(
            e if i else type(e)(e.image_id, "gone.vlds", e.label, e.split)
            for i, e in enumerate(manifest.entries)
        ),
        root=manifest.root,
    )
    with pytest.raises(PipelineError, match="gone.vlds"):
        train_pipeline(broken, toy_config)


def test_too_few_train_images_rejected(tmp_path):
    ds = generate_synthetic_dataset(
        tmp_path, class_count=2, images_per_class=2, regions_per_image=4, dim=4, seed=1,
        train_fraction=0.5,
    )
    with pytest.raises(PipelineError, match="too few train images"):
        train_pipeline(ds.manifest, PipelineConfig(setting="vlad", pca_output_dim=2, k=2))


def test_evaluate_perfect_and_inverted(toy_dataset, toy_bundle):
    report = evaluate(toy_bundle, toy_dataset.manifest)
    assert report.accuracy == 1.0
    assert np.array_equal(report.confusion, np.eye(3))
    assert report.confusion_counts.sum(axis=1).tolist() == [2, 2, 2]

    # permuting the class names misroutes every score: accuracy collapses
    svm = toy_bundle.svm
    rotated = LinearSvmModel(
        classes=(svm.classes[1], svm.classes[2], svm.classes[0]),
        weights=svm.weights,
        biases=svm.biases,
        regularization_c=svm.regularization_c,
    )
    wrong = ModelBundle(
        config=toy_bundle.config,
        pca=toy_bundle.pca,
        codebook=toy_bundle.codebook,
        svm=rotated,
    )
    assert evaluate(wrong, toy_dataset.manifest).accuracy == 0.0


def test_evaluate_requires_known_classes(toy_dataset, toy_bundle):
    manifest = toy_dataset.manifest
    bad = type(manifest)(
        entries=tuple(
            type(e)(e.image_id, e.path, "mystery" if i == len(manifest.entries) - 1 else e.label, e.split)
            for i, e in enumerate(manifest.entries)
        )
        + (type(manifest.entries[0])("extra", manifest.entries[0].path, "mystery", "train"),),
        root=manifest.root,
    )
    with pytest.raises(PipelineError, match="mystery"):
        evaluate(toy_bundle, bad)


def test_evaluate_requires_test_entries(toy_dataset, toy_bundle):
    manifest = toy_dataset.manifest
    train_only = type(manifest)(
        entries=manifest.split_entries("train"), root=manifest.root
    )
    with pytest.raises(PipelineError, match="no test entries"):
        evaluate(toy_bundle, train_only)


def test_report_row_sums_and_json(toy_dataset, toy_bundle):
    report = evaluate(toy_bundle, toy_dataset.manifest)
    sums = report.confusion.sum(axis=1)
    assert np.allclose(sums, 1.0, atol=1e-6)
    payload = report.to_json_dict()
    assert payload["accuracy"] == report.accuracy
    assert payload["config"]["setting"] == "vlad"
    text = report.to_text()
    assert "accuracy: 1.0000" in text
    assert "1.00" in text


def test_report_invariants_enforced(toy_config):
    with pytest.raises(ValueError, match="sum to 1"):
        EvaluationReport(
            classes=("a", "b"),
            accuracy=0.5,
            confusion=np.array([[0.6, 0.2], [0.0, 1.0]]),
            confusion_counts=np.array([[3, 1], [0, 4]]),
            per_class_counts={"a": 4, "b": 4},
            config=toy_config,
        )
    with pytest.raises(ValueError, match="inconsistent"):
        EvaluationReport(
            classes=("a", "b"),
            accuracy=0.9,
            confusion=np.array([[0.75, 0.25], [0.0, 1.0]]),
            confusion_counts=np.array([[3, 1], [0, 4]]),
            per_class_counts={"a": 4, "b": 4},
            config=toy_config,
        )


def test_pairwise_accuracy_arithmetic(toy_config):
    report = EvaluationReport(
        classes=("a", "b", "c"),
        accuracy=(3 + 1 + 5) / 13.0,
        confusion=np.array([[0.75, 0.25, 0.0], [0.5, 0.25, 0.25], [0.0, 0.0, 1.0]]),
        confusion_counts=np.array([[3, 1, 0], [2, 1, 1], [0, 0, 5]]),
        per_class_counts={"a": 4, "b": 4, "c": 5},
        config=toy_config,
    )
    assert pairwise_accuracy(report, "a", "b") == pytest.approx(4 / 8)
    assert pairwise_accuracy(report, "a", "c") == pytest.approx(8 / 9)
    with pytest.raises(ValueError, match="not in report"):
        pairwise_accuracy(report, "a", "zzz")


def test_bundle_roundtrip_is_byte_exact(tmp_path, toy_bundle):
    path = tmp_path / "m.vldb"
    save_bundle(toy_bundle, path)
    first = path.read_bytes()
    again = tmp_path / "m2.vldb"
    save_bundle(load_bundle(path), again)
    assert again.read_bytes() == first


def test_raw_bundle_roundtrip(tmp_path, toy_dataset):
    config = PipelineConfig(setting="raw_features", seed=42)
    bundle = train_pipeline(toy_dataset.manifest, config)
    assert bundle.pca is None and bundle.codebook is None
    assert bundle.svm.feature_dim == 8
    path = tmp_path / "raw.vldb"
    save_bundle(bundle, path)
    loaded = load_bundle(path)
    assert loaded.pca is None and loaded.codebook is None
    assert loaded.svm.classes == bundle.svm.classes  # class order survives
    assert np.array_equal(loaded.svm.weights, bundle.svm.weights)
    report = evaluate(loaded, toy_dataset.manifest)
    assert 0.0 <= report.accuracy <= 1.0


def test_whitened_pca_bundle_roundtrip(tmp_path, toy_bundle):
    from spvlad import pca_fit

    rng = np.random.default_rng(19)
    pca = pca_fit(rng.standard_normal((40, 8)) * np.arange(1.0, 9.0), 4, whiten=True)
    book = Codebook(centroids=rng.standard_normal((4, 4)).astype(np.float32))
    bundle = ModelBundle(
        config=toy_bundle.config, pca=pca, codebook=book, svm=toy_bundle.svm
    )
    path = tmp_path / "white.vldb"
    save_bundle(bundle, path)
    loaded = load_bundle(path)
    assert loaded.pca.whiten
    assert np.array_equal(loaded.pca.scales, pca.scales)
    save_bundle(loaded, path)
    first = path.read_bytes()
    save_bundle(load_bundle(path), path)
    assert path.read_bytes() == first


def test_bundle_error_cases(tmp_path, toy_bundle):
    path = tmp_path / "m.vldb"
    save_bundle(toy_bundle, path)
    raw = path.read_bytes()

    bad = tmp_path / "bad.vldb"
    bad.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(BundleError, match="bad bundle magic"):
        load_bundle(bad)

    bad.write_bytes(raw[:4] + b"\x09\x00\x00\x00" + raw[8:])
    with pytest.raises(BundleError, match="unsupported bundle version"):
        load_bundle(bad)

    bad.write_bytes(raw[:-6])
    with pytest.raises(BundleError, match="truncated"):
        load_bundle(bad)

    bad.write_bytes(raw + b"\x00")
    with pytest.raises(BundleError, match="trailing"):
        load_bundle(bad)


def test_bundle_consistency_enforced(toy_bundle):
    with pytest.raises(ValueError, match="raw_features bundles"):
        ModelBundle(
            config=PipelineConfig(setting="raw_features"),
            pca=toy_bundle.pca,
            codebook=toy_bundle.codebook,
            svm=toy_bundle.svm,
        )
    with pytest.raises(ValueError, match="codebook has k"):
        ModelBundle(
            config=toy_bundle.config.with_setting("vlad"),
            pca=toy_bundle.pca,
            codebook=Codebook(centroids=np.eye(4, 4)[:2]),
            svm=toy_bundle.svm,
        )


def test_code_file_roundtrip(tmp_path):
    values = np.array([1.5, -2.25, 0.0, 4.0])
    path = tmp_path / "c.bin"
    write_code_file(values, path)
    assert path.stat().st_size == 4 + 4 * 4
    back = read_code_file(path)
    assert np.array_equal(back, values)
    path.write_bytes(path.read_bytes()[:-2])
    with pytest.raises(BundleError, match="length mismatch"):
        read_code_file(path)


def test_resplit_manifest_deterministic(toy_dataset):
    manifest = toy_dataset.manifest
    a = resplit_manifest(manifest, train_fraction=0.5, seed=9)
    b = resplit_manifest(manifest, train_fraction=0.5, seed=9)
    assert a.entries == b.entries
    assert [e.image_id for e in a.entries] == [e.image_id for e in manifest.entries]
    for label in toy_dataset.class_names:
        n_train = sum(1 for e in a.entries if e.label == label and e.split == "train")
        assert n_train == 3  # 6 per class at fraction 0.5
    c = resplit_manifest(manifest, train_fraction=0.5, seed=10)
    assert c.entries != a.entries


def test_config_validation_and_json():
    with pytest.raises(ValueError, match="unknown setting"):
        PipelineConfig(setting="banana")
    with pytest.raises(ValueError, match="k must be positive"):
        PipelineConfig(k=0)
    with pytest.raises(ValueError, match="svm_c"):
        PipelineConfig(svm_c=0.0)
    config = PipelineConfig(
        setting="sp_vlad",
        pyramid=PyramidSpec(levels=((1, 1), (2, 2))),
        normalization=NormalizationScheme(power=0.5),
    )
    back = PipelineConfig.from_json_dict(config.to_json_dict())
    assert back == config
    with pytest.raises(ValueError, match="unknown config keys"):
        PipelineConfig.from_json_dict({"bogus": 1})


def test_pca_dim_exceeding_descriptor_dim_reported(toy_dataset):
    config = PipelineConfig(setting="vlad", pca_output_dim=64, k=2)
    with pytest.raises(PipelineError, match="exceeds descriptor dim"):
        train_pipeline(toy_dataset.manifest, config)
