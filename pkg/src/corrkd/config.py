"""Run configuration: YAML files, named presets, and override precedence.

A run config is a plain nested dict with five sections (dataset, net, train,
mrm, eval).  Values are resolved in increasing precedence: built-in defaults,
then a named preset, then a YAML file, then individual CLI overrides.  The
resolved dict converts into the typed config objects the rest of the package
uses.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from corrkd.corruption import MissingnessSpec
from corrkd.datasets import DatasetConfig
from corrkd.distill import TrainConfig
from corrkd.model import FusionNetConfig


class ConfigError(ValueError):
    pass


SECTIONS = ("dataset", "net", "train", "mrm", "eval")


def default_config() -> dict:
    return {
        "dataset": DatasetConfig().to_dict(),
        "net": {
            "d": 40,
            "num_heads": 10,
            "num_layers": 2,
            "ffn_dim": 160,
            "dropout": 0.1,
            "conv_kernel": 3,
        },
        "train": {
            "lr": 4e-3,
            "batch_size": 64,
            "epochs": 30,
            "seed": 0,
            "eta": 1.2,
            "p_max": 0.5,
            "loss_weights": [1.0, 1.0, 1.0, 1.0],
            "grad_clip": 5.0,
            "ntcr_renormalize": False,
            "statnet_hidden": 64,
            "statnet_layers": 2,
            "early_stop_metric": None,
        },
        "mrm": {
            "p_l": 0.0,
            "p_a": 0.0,
            "p_v": 0.0,
            "available": "lav",
            "mode": "random_train",
            "p_max": 0.5,
        },
        "eval": {
            "seeds": [0, 1, 2],
            "split": "test",
            "batch_size": 256,
        },
    }


# Hyperparameter presets named after the benchmark regimes they mirror.
PRESETS: dict[str, dict] = {
    "mosi-like": {
        "train": {"lr": 4e-3, "batch_size": 64, "epochs": 50, "eta": 1.2},
        "net": {"d": 40, "num_heads": 10},
    },
    "mosei-like": {
        "train": {"lr": 2e-3, "batch_size": 32, "epochs": 20, "eta": 1.0},
        "net": {"d": 40, "num_heads": 8},
    },
    "iemocap-like": {
        "train": {"lr": 4e-3, "batch_size": 64, "epochs": 30, "eta": 1.4},
        "net": {"d": 40, "num_heads": 10},
    },
}


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = dict(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val, where)
        else:
            out[key] = val
    return out


def load_config_file(path: Path | str) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at top level")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(
            f"unknown config sections {sorted(unknown)} in {path}; "
            f"expected a subset of {list(SECTIONS)}"
        )
    return data


def resolve_config(
    preset: str | None = None,
    config_path: Path | str | None = None,
    overrides: dict | None = None,
) -> dict:
    """Apply defaults < preset < file < overrides and return the full dict."""
    cfg = default_config()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        cfg = _merge(cfg, PRESETS[preset])
    if config_path is not None:
        cfg = _merge(cfg, load_config_file(config_path))
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


def dataset_config(cfg: dict) -> DatasetConfig:
    try:
        return DatasetConfig.from_dict(cfg["dataset"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad dataset section: {e}") from e


def net_config(cfg: dict) -> FusionNetConfig:
    """Network section + the shapes the dataset dictates."""
    ds = dataset_config(cfg)
    section = dict(cfg["net"])
    section["num_classes"] = ds.num_classes
    section["feature_dims"] = list(ds.feature_dims)
    try:
        return FusionNetConfig.from_dict(section)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad net section: {e}") from e


def mrm_spec(cfg: dict) -> MissingnessSpec:
    try:
        return MissingnessSpec.from_dict(cfg["mrm"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad mrm section: {e}") from e


def train_config(cfg: dict) -> TrainConfig:
    section = dict(cfg["train"])
    try:
        return TrainConfig(
            net=net_config(cfg),
            mrm=mrm_spec(cfg),
            lr=float(section["lr"]),
            batch_size=int(section["batch_size"]),
            epochs=int(section["epochs"]),
            seed=int(section["seed"]),
            eta=float(section["eta"]),
            p_max=float(section["p_max"]),
            loss_weights=tuple(section["loss_weights"]),
            grad_clip=float(section["grad_clip"]),
            ntcr_renormalize=bool(section["ntcr_renormalize"]),
            statnet_hidden=int(section["statnet_hidden"]),
            statnet_layers=int(section["statnet_layers"]),
            early_stop_metric=section.get("early_stop_metric"),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad train section: {e}") from e


def eval_settings(cfg: dict) -> dict:
    section = cfg["eval"]
    seeds = tuple(int(s) for s in section["seeds"])
    if not seeds:
        raise ConfigError("eval.seeds must be nonempty")
    split = section["split"]
    if split not in ("train", "valid", "test"):
        raise ConfigError(f"eval.split must be train/valid/test, got {split!r}")
    return {"seeds": seeds, "split": split,
            "batch_size": int(section.get("batch_size", 256))}


def dump_config(cfg: dict, path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(cfg, f, sort_keys=True, default_flow_style=False)
