"""Command-line interface.

Subcommands: generate, train, encode, predict, evaluate, ablate.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bundle import BundleError, ModelBundle, load_bundle, save_bundle, write_code_file
from .config import PipelineConfig
from .descriptors import (
    DescriptorFileError,
    ManifestError,
    load_manifest,
    read_descriptor_file,
)
from .pipeline import (
    PipelineError,
    ablation_table,
    encode_image,
    evaluate,
    predict_image,
    resplit_manifest,
    run_ablation,
    train_pipeline,
)
from .synthetic import generate_synthetic_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we reserve 2 for data errors
        raise UsageError(message)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file; flags override it")
    p.add_argument("--setting", choices=("raw_features", "vlad", "sp_vlad"))
    p.add_argument("--pca-dim", type=int, dest="pca_output_dim")
    p.add_argument("--pca-sample-cap", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--pyramid", help="levels as RxC list, e.g. '1x1,2x2'")
    p.add_argument("--power", type=float, help="signed-power normalization exponent")
    p.add_argument("--intra-l2", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--global-l2", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--svm-c", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--region-cap", type=int)
    p.add_argument(
        "--resplit-fraction",
        type=float,
        help="reassign manifest splits per class at this train fraction (seeded)",
    )


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    try:
        merged: dict = {}
        if args.config is not None:
            merged = json.loads(Path(args.config).read_text(encoding="utf-8"))
            if not isinstance(merged, dict):
                raise ValueError("config file must hold a JSON object")
        for key in (
            "setting",
            "pca_output_dim",
            "pca_sample_cap",
            "k",
            "pyramid",
            "svm_c",
            "seed",
            "region_cap",
        ):
            value = getattr(args, key, None)
            if value is not None:
                merged[key] = value
        norm_overrides = {
            "power": args.power,
            "intra_block_l2": args.intra_l2,
            "global_l2": args.global_l2,
        }
        if any(v is not None for v in norm_overrides.values()):
            norm = dict(merged.get("normalization", {}))
            for key, value in norm_overrides.items():
                if value is not None:
                    norm[key] = value
            merged["normalization"] = norm
        return PipelineConfig.from_json_dict(merged)
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc


def _manifest_for(args: argparse.Namespace):
    manifest = load_manifest(args.manifest)
    fraction = getattr(args, "resplit_fraction", None)
    if fraction is not None:
        seed = args.seed if getattr(args, "seed", None) is not None else 42
        manifest = resplit_manifest(manifest, train_fraction=fraction, seed=seed)
    return manifest


def _cmd_generate(args) -> int:
    try:
        dataset = generate_synthetic_dataset(
            out_dir=args.out,
            class_count=args.classes,
            images_per_class=args.images_per_class,
            regions_per_image=args.regions,
            dim=args.dim,
            spatial_signal=args.spatial_signal,
            seed=args.seed,
            train_fraction=args.train_fraction,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(f"wrote {len(dataset.manifest.entries)} descriptor files")
    print(f"manifest: {dataset.manifest_path}")
    if dataset.confusable_pairs:
        pairs = ", ".join(f"{a}/{b}" for a, b in dataset.confusable_pairs)
        print(f"descriptor-identical pairs: {pairs}")
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _config_from_args(args)
    bundle = train_pipeline(_manifest_for(args), config)
    save_bundle(bundle, args.out)
    print(
        f"trained {config.setting} bundle: {len(bundle.svm.classes)} classes, "
        f"code dim {bundle.svm.feature_dim} -> {args.out}"
    )
    return EXIT_OK


def _cmd_encode(args) -> int:
    bundle = load_bundle(args.bundle)
    dset = read_descriptor_file(args.descriptors)
    write_code_file(encode_image(bundle, dset), args.out)
    print(f"wrote code ({bundle.svm.feature_dim} values) -> {args.out}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    bundle = load_bundle(args.bundle)
    dset = read_descriptor_file(args.descriptors)
    print(predict_image(bundle, dset))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    bundle = load_bundle(args.bundle)
    report = evaluate(bundle, _manifest_for(args))
    sys.stdout.write(report.to_text())
    if args.json_out is not None:
        Path(args.json_out).write_text(report.to_json(), encoding="utf-8")
        print(f"report -> {args.json_out}")
    return EXIT_OK


def _cmd_ablate(args) -> int:
    config = _config_from_args(args)
    manifest = _manifest_for(args)
    results = run_ablation(manifest, config)
    sys.stdout.write(ablation_table(results))
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for setting, bundle, report in results:
            save_bundle(bundle, out_dir / f"{setting}.vldb")
            (out_dir / f"{setting}.report.json").write_text(
                report.to_json(), encoding="utf-8"
            )
        print(f"bundles and reports -> {out_dir}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="spvlad", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a seeded synthetic dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--images-per-class", type=int, default=20)
    p.add_argument("--regions", type=int, default=50)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--spatial-signal", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.675)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train a model bundle from a manifest")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("encode", help="encode one descriptor file to a code file")
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--descriptors", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("predict", help="print the predicted label for one image")
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--descriptors", type=Path, required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="evaluate a bundle on a manifest's test split")
    p.add_argument("--bundle", type=Path, required=True)
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--json-out", type=Path)
    p.add_argument("--resplit-fraction", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablate", help="train and evaluate all three settings")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--out-dir", type=Path)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        DescriptorFileError,
        ManifestError,
        BundleError,
        PipelineError,
        ValueError,
        OSError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())
