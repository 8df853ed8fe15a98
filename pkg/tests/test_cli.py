"""CLI subcommands and exit-code contract (0 ok, 1 usage, 2 data, 3 internal)."""

import json

import pytest

from spvlad.cli import main


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_data")
    code = main(
        [
            "generate",
            "--out",
            str(out),
            "--classes",
            "3",
            "--images-per-class",
            "6",
            "--regions",
            "10",
            "--dim",
            "8",
            "--seed",
            "2",
        ]
    )
    assert code == 0
    return out


def test_generate_then_train_predict_evaluate(dataset_dir, tmp_path, capsys):
    manifest = dataset_dir / "manifest.jsonl"
    bundle = tmp_path / "model.vldb"
    assert (
        main(
            [
                "train",
                "--manifest",
                str(manifest),
                "--out",
                str(bundle),
                "--setting",
                "vlad",
                "--pca-dim",
                "4",
                "--k",
                "4",
            ]
        )
        == 0
    )
    assert bundle.exists()

    sample = json.loads(manifest.read_text().splitlines()[0])
    descriptor_file = dataset_dir / sample["path"]
    capsys.readouterr()
    assert main(["predict", "--bundle", str(bundle), "--descriptors", str(descriptor_file)]) == 0
    printed = capsys.readouterr().out.strip()
    assert printed == sample["label"]

    report_json = tmp_path / "report.json"
    assert (
        main(
            [
                "evaluate",
                "--bundle",
                str(bundle),
                "--manifest",
                str(manifest),
                "--json-out",
                str(report_json),
            ]
        )
        == 0
    )
    payload = json.loads(report_json.read_text())
    assert 0.0 <= payload["accuracy"] <= 1.0
    assert payload["config"]["setting"] == "vlad"

    code_file = tmp_path / "img.code"
    assert (
        main(
            [
                "encode",
                "--bundle",
                str(bundle),
                "--descriptors",
                str(descriptor_file),
                "--out",
                str(code_file),
            ]
        )
        == 0
    )
    assert code_file.stat().st_size == 4 + 4 * 16


def test_config_file_with_flag_overrides(dataset_dir, tmp_path):
    config_path = tmp_path / "cfg.json"
    config_path.write_text(
        json.dumps(
            {
                "setting": "sp_vlad",
                "pca_output_dim": 4,
                "k": 2,
                "pyramid": [[1, 1], [2, 2]],
                "normalization": {"power": 0.5, "global_l2": True},
            }
        )
    )
    bundle = tmp_path / "m.vldb"
    assert (
        main(
            [
                "train",
                "--manifest",
                str(dataset_dir / "manifest.jsonl"),
                "--out",
                str(bundle),
                "--config",
                str(config_path),
                "--k",
                "4",  # flag beats file
            ]
        )
        == 0
    )
    from spvlad import load_bundle

    loaded = load_bundle(bundle)
    assert loaded.config.k == 4
    assert loaded.config.setting == "sp_vlad"
    assert loaded.config.normalization.power == 0.5


def test_ablate_writes_bundles_and_reports(dataset_dir, tmp_path, capsys):
    out_dir = tmp_path / "ablation"
    assert (
        main(
            [
                "ablate",
                "--manifest",
                str(dataset_dir / "manifest.jsonl"),
                "--pca-dim",
                "4",
                "--k",
                "4",
                "--out-dir",
                str(out_dir),
            ]
        )
        == 0
    )
    table = capsys.readouterr().out
    for setting in ("raw_features", "vlad", "sp_vlad"):
        assert setting in table
        assert (out_dir / f"{setting}.vldb").exists()
        assert (out_dir / f"{setting}.report.json").exists()


def test_usage_errors_exit_1(tmp_path, capsys):
    assert main(["train", "--manifest"]) == 1
    assert main(["no-such-command"]) == 1
    assert main(["generate", "--out", str(tmp_path), "--classes", "0"]) == 1
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text("{not json")
    assert (
        main(
            [
                "train",
                "--manifest",
                str(tmp_path / "m.jsonl"),
                "--out",
                str(tmp_path / "b"),
                "--config",
                str(bad_cfg),
            ]
        )
        == 1
    )
    capsys.readouterr()


def test_data_errors_exit_2(dataset_dir, tmp_path, capsys):
    assert (
        main(["train", "--manifest", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "b")])
        == 2
    )
    bad_file = tmp_path / "broken.vlds"
    bad_file.write_bytes(b"JUNKJUNKJUNK")
    bundle = tmp_path / "model.vldb"
    assert (
        main(
            [
                "train",
                "--manifest",
                str(dataset_dir / "manifest.jsonl"),
                "--out",
                str(bundle),
                "--setting",
                "vlad",
                "--pca-dim",
                "4",
                "--k",
                "4",
            ]
        )
        == 0
    )
    assert main(["predict", "--bundle", str(bundle), "--descriptors", str(bad_file)]) == 2
    err = capsys.readouterr().err
    assert "data error" in err


def test_resplit_flag(dataset_dir, tmp_path):
    bundle = tmp_path / "m.vldb"
    assert (
        main(
            [
                "train",
                "--manifest",
                str(dataset_dir / "manifest.jsonl"),
                "--out",
                str(bundle),
                "--setting",
                "raw_features",
                "--resplit-fraction",
                "0.5",
                "--seed",
                "3",
            ]
        )
        == 0
    )
