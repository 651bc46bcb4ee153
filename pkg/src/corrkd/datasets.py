"""Synthetic three-modality sequence classification data.

Stands in for real multimodal sentiment corpora at desk scale: every sample
carries one float matrix per modality (language / audio / visual), all three
projected from a shared per-sample latent vector so that modalities are
individually class-predictive and mutually correlated.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

MODALITIES = ("l", "a", "v")
SPLITS = ("train", "valid", "test")

SCHEMA_VERSION = 1

# Class means sit at scaled one-hot corners of latent space.  The per-sample
# latent has unit covariance, so the corner scale must dominate 1.0 for the
# splits to be linearly separable; 4*noise_std keeps the spacing ahead of the
# observation noise when that is the larger effect.
_MEAN_SCALE_FLOOR = 8.0


class DatasetError(ValueError):
    """Malformed dataset file or invalid record."""


@dataclass(frozen=True)
class DatasetConfig:
    """Generation recipe for one synthetic dataset."""

    num_classes: int = 4
    samples_per_split: tuple[int, int, int] = (2000, 400, 600)
    seq_lens: tuple[int, int, int] = (20, 20, 20)
    feature_dims: tuple[int, int, int] = (12, 8, 6)
    latent_dim: int = 8
    noise_std: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "samples_per_split", tuple(int(n) for n in self.samples_per_split))
        object.__setattr__(self, "seq_lens", tuple(int(n) for n in self.seq_lens))
        object.__setattr__(self, "feature_dims", tuple(int(n) for n in self.feature_dims))
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        for name, triple in (("samples_per_split", self.samples_per_split),
                             ("seq_lens", self.seq_lens),
                             ("feature_dims", self.feature_dims)):
            if len(triple) != 3 or any(n < 1 for n in triple):
                raise ValueError(f"{name} must be three positive integers, got {triple}")
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if self.noise_std < 0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.latent_dim < self.num_classes - 1:
            warnings.warn(
                f"latent_dim={self.latent_dim} < num_classes-1={self.num_classes - 1}: "
                "class means are forced into a degenerate arrangement",
                stacklevel=2,
            )

    def to_dict(self) -> dict:
        return {
            "num_classes": self.num_classes,
            "samples_per_split": list(self.samples_per_split),
            "seq_lens": list(self.seq_lens),
            "feature_dims": list(self.feature_dims),
            "latent_dim": self.latent_dim,
            "noise_std": self.noise_std,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        return cls(
            num_classes=int(d["num_classes"]),
            samples_per_split=tuple(d["samples_per_split"]),
            seq_lens=tuple(d["seq_lens"]),
            feature_dims=tuple(d["feature_dims"]),
            latent_dim=int(d["latent_dim"]),
            noise_std=float(d["noise_std"]),
            seed=int(d["seed"]),
        )


@dataclass(eq=False)
class ModalitySample:
    """One labelled sample: three per-modality (T_m, d_m) float matrices."""

    id: str
    label: int
    x_l: np.ndarray
    x_a: np.ndarray
    x_v: np.ndarray

    def modality(self, m: str) -> np.ndarray:
        return getattr(self, f"x_{m}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModalitySample):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and all(np.array_equal(self.modality(m), other.modality(m)) for m in MODALITIES)
        )


@dataclass(eq=False)
class Dataset:
    config: DatasetConfig
    train: list[ModalitySample] = field(default_factory=list)
    valid: list[ModalitySample] = field(default_factory=list)
    test: list[ModalitySample] = field(default_factory=list)

    def split(self, name: str) -> list[ModalitySample]:
        if name not in SPLITS:
            raise KeyError(f"unknown split {name!r}, expected one of {SPLITS}")
        return getattr(self, name)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.config == other.config and all(
            self.split(s) == other.split(s) for s in SPLITS
        )


def class_means(config: DatasetConfig) -> np.ndarray:
    """(K, latent_dim) matrix of class means at scaled one-hot corners.

    When latent_dim < num_classes the corners are reused at growing scale so
    means stay pairwise distinct.
    """
    scale = max(_MEAN_SCALE_FLOOR, 4.0 * config.noise_std)
    means = np.zeros((config.num_classes, config.latent_dim))
    for k in range(config.num_classes):
        axis = k % config.latent_dim
        means[k, axis] = scale * (1 + k // config.latent_dim)
    return means


def generate_synthetic(config: DatasetConfig) -> Dataset:
    """Generate a dataset as a pure function of its config.

    Per class k a fixed latent mean; per sample a latent z ~ N(mu_k, I); per
    modality each frame is a fixed random affine projection of z plus
    N(0, noise_std^2) observation noise.  Labels cycle through the classes so
    every split is balanced.
    """
    seq = np.random.SeedSequence(config.seed)
    proj_seq, *split_seqs = seq.spawn(4)
    proj_rng = np.random.default_rng(proj_seq)

    means = class_means(config)
    proj = {}
    for m, d_m in zip(MODALITIES, config.feature_dims):
        a = proj_rng.normal(size=(d_m, config.latent_dim)) / math.sqrt(config.latent_dim)
        b = proj_rng.normal(size=d_m)
        proj[m] = (a, b)

    ds = Dataset(config=config)
    for split, n, split_seq in zip(SPLITS, config.samples_per_split, split_seqs):
        rng = np.random.default_rng(split_seq)
        samples = ds.split(split)
        for i in range(n):
            label = i % config.num_classes
            z = means[label] + rng.standard_normal(config.latent_dim)
            mats = {}
            for m, t_m, d_m in zip(MODALITIES, config.seq_lens, config.feature_dims):
                a, b = proj[m]
                clean = z @ a.T + b
                x = np.tile(clean, (t_m, 1))
                if config.noise_std > 0:
                    x = x + config.noise_std * rng.standard_normal((t_m, d_m))
                mats[m] = x
            samples.append(
                ModalitySample(id=f"{split}-{i:05d}", label=label,
                               x_l=mats["l"], x_a=mats["a"], x_v=mats["v"])
            )
    return ds


def _fmt_matrix(x: np.ndarray) -> str:
    rows = (",".join(format(v, ".9g") for v in row) for row in x)
    return "[[" + "],[".join(rows) + "]]"


def manifest_path(path: Path | str) -> Path:
    return Path(str(path) + ".manifest.json")


def save_dataset(ds: Dataset, path: Path | str) -> None:
    """Write JSON-lines records (train, valid, test order) plus a sidecar
    manifest carrying the config and split sizes.

    Floats are serialized with 9 significant digits, so one save/load cycle
    is a fixed point but in-memory values are not preserved bit-exactly.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for split in SPLITS:
            for s in ds.split(split):
                f.write(
                    f'{{"id":{json.dumps(s.id)},"label":{s.label},'
                    f'"x_l":{_fmt_matrix(s.x_l)},'
                    f'"x_a":{_fmt_matrix(s.x_a)},'
                    f'"x_v":{_fmt_matrix(s.x_v)}}}\n'
                )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": ds.config.to_dict(),
        "splits": {s: len(ds.split(s)) for s in SPLITS},
    }
    with open(manifest_path(path), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")


def _parse_record(line: str, lineno: int, config: DatasetConfig) -> ModalitySample:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise DatasetError(f"line {lineno}: invalid JSON ({e.msg})") from e
    for key in ("id", "label", "x_l", "x_a", "x_v"):
        if key not in rec:
            raise DatasetError(f"line {lineno}: record missing field {key!r}")
    label = rec["label"]
    if not isinstance(label, int) or not (0 <= label < config.num_classes):
        raise DatasetError(
            f"line {lineno}: record {rec['id']!r} has label {label!r} "
            f"outside [0, {config.num_classes})"
        )
    mats = {}
    for m, t_m, d_m in zip(MODALITIES, config.seq_lens, config.feature_dims):
        try:
            x = np.asarray(rec[f"x_{m}"], dtype=np.float64)
        except ValueError as e:
            raise DatasetError(f"line {lineno}: record {rec['id']!r} x_{m} is ragged") from e
        if x.shape != (t_m, d_m):
            raise DatasetError(
                f"line {lineno}: record {rec['id']!r} x_{m} has shape {x.shape}, "
                f"expected ({t_m}, {d_m})"
            )
        if not np.isfinite(x).all():
            raise DatasetError(f"line {lineno}: record {rec['id']!r} x_{m} has non-finite values")
        mats[m] = x
    return ModalitySample(id=rec["id"], label=label,
                          x_l=mats["l"], x_a=mats["a"], x_v=mats["v"])


def load_dataset(path: Path | str) -> Dataset:
    """Inverse of save_dataset; raises DatasetError naming the offending
    line/record on any malformed input."""
    path = Path(path)
    mpath = manifest_path(path)
    if not mpath.exists():
        raise DatasetError(f"manifest not found: {mpath}")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as e:
        raise DatasetError(f"{mpath.name}: invalid JSON ({e.msg})") from e
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise DatasetError(
            f"unsupported schema_version {manifest.get('schema_version')!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    config = DatasetConfig.from_dict(manifest["config"])
    counts = manifest["splits"]

    ds = Dataset(config=config)
    seen_ids: set[str] = set()
    with open(path) as f:
        lines = f.read().splitlines()
    expected = sum(counts[s] for s in SPLITS)
    if len(lines) != expected:
        raise DatasetError(
            f"{path.name}: expected {expected} records per manifest, found {len(lines)}"
        )
    lineno = 0
    for split in SPLITS:
        for _ in range(counts[split]):
            lineno += 1
            sample = _parse_record(lines[lineno - 1], lineno, config)
            if sample.id in seen_ids:
                raise DatasetError(f"line {lineno}: duplicate id {sample.id!r}")
            seen_ids.add(sample.id)
            ds.split(split).append(sample)
    return ds


def batch_iter(
    samples: list[ModalitySample],
    batch_size: int,
    shuffle: bool = False,
    seed: int = 0,
    epoch: int = 0,
) -> Iterator[list[ModalitySample]]:
    """Yield one epoch of mini-batches; the final short batch is kept.

    Shuffle order is a pure function of (seed, epoch).
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    n = len(samples)
    if n == 0:
        return
    if shuffle:
        order = np.random.default_rng([seed, epoch]).permutation(n)
    else:
        order = np.arange(n)
    for start in range(0, n, batch_size):
        yield [samples[j] for j in order[start:start + batch_size]]
