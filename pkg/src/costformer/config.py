"""Run configuration: JSON files layered over named presets, then flags."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .model.config import LossConfig, TrainParams, TransformerConfig
from .pipeline import PipelineConfig


class ConfigError(ValueError):
    pass


DATASET_DEFAULTS = {
    "aps": {"format": "aps_csv", "train_path": "aps_failure_training_set.csv",
            "test_path": "aps_failure_test_set.csv", "missing_token": "na", "label_column": "class"},
    "secom": {"format": "secom_pair", "features_path": "secom.data", "labels_path": "secom_labels.data",
              "missing_token": "nan", "kfold": 8, "fold": 0},
    "generic": {"format": "generic_csv", "train_path": "train.csv", "test_path": "test.csv",
                "missing_token": "na", "label_column": "class"},
}

_APS_PAPER = {
    "dataset": {"kind": "aps"},
    "pipeline": {"impute_rounds": 100},
    "model": {"input_dim": 142, "n_blocks": 4, "n_heads": 4, "head_size": 256, "ff_filters": 4,
              "enc_dropout": 0.25, "mlp_units": [128, 64], "mlp_dropout": 0.4},
    "loss": {"kind": "focal", "alpha": 0.95, "gamma": 1.5},
    "train": {"lr": 5e-4, "batch_size": 72, "max_epochs": 8000, "val_fraction": 0.10},
    "seeds": [1, 2, 3, 4, 5],
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


PRESETS = {
    "aps_paper": _APS_PAPER,
    "aps_desk": _merge(_APS_PAPER, {
        "dataset": {"subsample_rows": 6000, "test_subsample_rows": 1600},
        "pipeline": {"impute_rounds": 5},
        "model": {"n_blocks": 1, "n_heads": 2, "head_size": 16, "ff_filters": 4, "mlp_units": [32, 16]},
        "train": {"max_epochs": 200},
        "seeds": [1, 2, 3],
    }),
    "secom_paper": _merge(_APS_PAPER, {
        "dataset": {"kind": "secom"},
        "model": {"input_dim": 538, "n_blocks": 1, "n_heads": 1, "head_size": 64, "mlp_units": [2, 64]},
    }),
}
PRESETS["secom_desk"] = _merge(PRESETS["secom_paper"], {"pipeline": {"impute_rounds": 5},
                                                         "train": {"max_epochs": 300}, "seeds": [1, 2, 3]})


@dataclass
class RunConfig:
    preset: str | None
    dataset: dict
    pipeline: PipelineConfig
    model: TransformerConfig
    loss: LossConfig
    train: TrainParams
    seeds: list[int] = field(default_factory=lambda: [0])

    def to_dict(self) -> dict:
        return {"preset": self.preset, "dataset": dict(self.dataset), "pipeline": asdict(self.pipeline),
                "model": self.model.to_dict(), "loss": asdict(self.loss), "train": asdict(self.train),
                "seeds": list(self.seeds)}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = set(d) - {"preset", "dataset", "pipeline", "model", "loss", "train", "seeds"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        ds = dict(d.get("dataset", {}))
        kind = ds.get("kind", "generic")
        if kind not in DATASET_DEFAULTS:
            raise ConfigError(f"unknown dataset kind {kind!r}")
        ds = {"kind": kind, **DATASET_DEFAULTS[kind], **ds}
        seeds = [int(s) for s in d.get("seeds", [0])]
        if not seeds:
            raise ConfigError("seeds list is empty")
        try:
            return cls(preset=d.get("preset"), dataset=ds,
                       pipeline=PipelineConfig(**d.get("pipeline", {})),
                       model=TransformerConfig.from_dict(d.get("model", {})),
                       loss=LossConfig(**d.get("loss", {})),
                       train=TrainParams(**d.get("train", {})), seeds=seeds)
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from None


def expand(preset: str | None = None, file_cfg: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Preset values, then file keys, then ``overrides``; later layers win."""
    base: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        base = copy.deepcopy(PRESETS[preset])
    if file_cfg:
        if preset is None and file_cfg.get("preset"):
            return expand(file_cfg["preset"], file_cfg, overrides)
        base = _merge(base, file_cfg)
    if overrides:
        base = _merge(base, overrides)
    base["preset"] = preset if preset is not None else base.get("preset")
    return RunConfig.from_dict(base)


def load_config_file(path) -> dict:
    p = Path(path)
    try:
        return json.loads(p.read_text())
    except OSError as err:
        raise ConfigError(f"cannot read config {p}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{p}: invalid JSON ({err})") from None
