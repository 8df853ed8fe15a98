#!/usr/bin/env python3
"""Accuracy vs codebook size on a synthetic dataset.

Sweeps k for the plain-VLAD setting to show where the codebook saturates
for a fixed descriptor distribution; code dimension grows linearly with k.
"""

import argparse
import tempfile
from pathlib import Path

from spvlad import PipelineConfig, evaluate, generate_synthetic_dataset, train_pipeline


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ks", type=int, nargs="+", default=[2, 4, 8, 16, 32])
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--images-per-class", type=int, default=20)
    parser.add_argument("--regions", type=int, default=50)
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--pca-dim", type=int, default=16)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = Path(tempfile.mkdtemp(prefix="spvlad_sweep_"))
    dataset = generate_synthetic_dataset(
        out,
        class_count=args.classes,
        images_per_class=args.images_per_class,
        regions_per_image=args.regions,
        dim=args.dim,
        seed=args.seed,
    )
    print(f"dataset: {dataset.manifest_path}")
    print(f"{'k':>4}{'code dim':>10}{'accuracy':>10}")
    for k in args.ks:
        config = PipelineConfig(setting="vlad", pca_output_dim=args.pca_dim, k=k, seed=42)
        bundle = train_pipeline(dataset.manifest, config)
        report = evaluate(bundle, dataset.manifest)
        print(f"{k:>4}{bundle.svm.feature_dim:>10}{report.accuracy:>10.4f}")


if __name__ == "__main__":
    main()
