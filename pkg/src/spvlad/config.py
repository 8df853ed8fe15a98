"""Pipeline configuration: one dataclass, JSON round-trip, strict validation.

Config files are plain JSON mirroring the field names; every field is
optional and falls back to the defaults below. Fields that a setting does
not use (e.g. the pyramid under plain VLAD) are still validated so a config
file is either wholly good or rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

from .pyramid import DEFAULT_LEVELS, PyramidSpec
from .vlad import NormalizationScheme

SETTINGS = ("raw_features", "vlad", "sp_vlad")

DEFAULT_PCA_OUTPUT_DIM = 256
DEFAULT_PCA_SAMPLE_CAP = 220_000
DEFAULT_K = 16
DEFAULT_SVM_C = 1.0
DEFAULT_SEED = 42
DEFAULT_REGION_CAP = 1000


@dataclass(frozen=True)
class PipelineConfig:
    setting: str = "sp_vlad"
    pca_output_dim: int = DEFAULT_PCA_OUTPUT_DIM
    pca_sample_cap: int = DEFAULT_PCA_SAMPLE_CAP
    k: int = DEFAULT_K
    pyramid: PyramidSpec = field(default_factory=PyramidSpec)
    normalization: NormalizationScheme = field(default_factory=NormalizationScheme)
    svm_c: float = DEFAULT_SVM_C
    seed: int = DEFAULT_SEED
    region_cap: int = DEFAULT_REGION_CAP

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ValueError(f"unknown setting '{self.setting}'; expected one of {SETTINGS}")
        for name in ("pca_output_dim", "pca_sample_cap", "k", "seed", "region_cap"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValueError(f"{name} must be an integer, got {v!r}")
        for name in ("pca_output_dim", "pca_sample_cap", "k", "region_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.svm_c <= 0:
            raise ValueError("svm_c must be positive")

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "setting": self.setting,
            "pca_output_dim": self.pca_output_dim,
            "pca_sample_cap": self.pca_sample_cap,
            "k": self.k,
            "pyramid": [list(level) for level in self.pyramid.levels],
            "normalization": {
                "power": self.normalization.power,
                "intra_block_l2": self.normalization.intra_block_l2,
                "global_l2": self.normalization.global_l2,
            },
            "svm_c": self.svm_c,
            "seed": self.seed,
            "region_cap": self.region_cap,
        }

    @classmethod
    def from_json_dict(cls, obj: dict[str, Any]) -> "PipelineConfig":
        if not isinstance(obj, dict):
            raise ValueError("config must be a JSON object")
        known = {
            "setting",
            "pca_output_dim",
            "pca_sample_cap",
            "k",
            "pyramid",
            "normalization",
            "svm_c",
            "seed",
            "region_cap",
        }
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {k: v for k, v in obj.items() if k not in ("pyramid", "normalization")}
        if "pyramid" in obj:
            kwargs["pyramid"] = parse_pyramid(obj["pyramid"])
        if "normalization" in obj:
            norm = obj["normalization"]
            if not isinstance(norm, dict):
                raise ValueError("normalization must be a JSON object")
            kwargs["normalization"] = NormalizationScheme(
                power=norm.get("power"),
                intra_block_l2=bool(norm.get("intra_block_l2", False)),
                global_l2=bool(norm.get("global_l2", True)),
            )
        if "svm_c" in kwargs:
            kwargs["svm_c"] = float(kwargs["svm_c"])
        return cls(**kwargs)

    def with_setting(self, setting: str) -> "PipelineConfig":
        return replace(self, setting=setting)


def parse_pyramid(value: Any) -> PyramidSpec:
    """Accept [[1,1],[2,2]]-style lists or '1x1,2x2'-style strings."""
    if isinstance(value, PyramidSpec):
        return value
    if isinstance(value, str):
        levels = []
        for part in value.split(","):
            rows, _, cols = part.strip().partition("x")
            try:
                levels.append((int(rows), int(cols)))
            except ValueError as exc:
                raise ValueError(f"bad pyramid level '{part.strip()}': expected RxC") from exc
        return PyramidSpec(levels=tuple(levels))
    if isinstance(value, (list, tuple)):
        try:
            return PyramidSpec(levels=tuple((int(r), int(c)) for r, c in value))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad pyramid specification {value!r}") from exc
    raise ValueError(f"bad pyramid specification {value!r}")


DEFAULT_PYRAMID_LEVELS = DEFAULT_LEVELS
