"""CLI: batch-extract a directory of images into descriptor files.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .export import export_batch
from .features import ExtractorConfig, WeightsUnavailableError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _config_from_args(args) -> ExtractorConfig:
    try:
        merged: dict = {}
        if args.config is not None:
            merged = json.loads(Path(args.config).read_text(encoding="utf-8"))
            if not isinstance(merged, dict):
                raise ValueError("config file must hold a JSON object")
        for key in ("proposal_source", "max_regions", "feature_layer", "model_identifier"):
            value = getattr(args, key)
            if value is not None:
                merged[key] = value
        unknown = set(merged) - {
            "proposal_source",
            "max_regions",
            "feature_layer",
            "model_identifier",
        }
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return ExtractorConfig(**merged)
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="spvlad-extract", description=__doc__)
    parser.add_argument("--images", type=Path, required=True, help="input image directory")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument("--config", type=Path, help="JSON config; flags override it")
    parser.add_argument("--proposal-source", choices=("edge_based", "sliding_grid"),
                        dest="proposal_source")
    parser.add_argument("--max-regions", type=int, dest="max_regions")
    parser.add_argument("--feature-layer", dest="feature_layer")
    parser.add_argument("--model", dest="model_identifier")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        config = _config_from_args(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        fragment = export_batch(args.images, args.out, config)
        print(f"descriptor files -> {args.out}")
        print(f"manifest fragment -> {fragment}")
        return 0
    except (WeightsUnavailableError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())
