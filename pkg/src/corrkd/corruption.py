"""Modality Random Missing (MRM): frame-level and whole-modality dropout.

Dropped positions are replaced with zero vectors in the raw features, before
any embedding; nothing downstream masks them out, the network has to learn to
ignore zeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from corrkd.datasets import MODALITIES, ModalitySample

MODES = ("fixed", "random_train")

# The 7 nonempty availability subsets, in reporting order: unimodal, bimodal,
# complete.
AVAILABILITY_SUBSETS: tuple[frozenset, ...] = tuple(
    frozenset(s) for s in ("l", "a", "v", "la", "lv", "av", "lav")
)


class MissingnessError(ValueError):
    """Invalid missingness spec or pattern/sample mismatch."""


def round_half_away(x: float) -> int:
    """Round to nearest integer, halves away from zero (for x >= 0)."""
    if x < 0:
        raise ValueError(f"expected nonnegative value, got {x}")
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class MissingnessSpec:
    """Per-modality frame-drop ratios plus the set of available modalities."""

    p_l: float = 0.0
    p_a: float = 0.0
    p_v: float = 0.0
    available: frozenset = frozenset(MODALITIES)
    mode: str = "fixed"
    p_max: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "available", frozenset(self.available))
        for m in MODALITIES:
            p = self.p(m)
            if not 0.0 <= p <= 1.0:
                raise MissingnessError(f"p_{m} must be in [0, 1], got {p}")
        if not self.available <= frozenset(MODALITIES):
            raise MissingnessError(f"available must be a subset of {MODALITIES}, got {set(self.available)}")
        if self.mode not in MODES:
            raise MissingnessError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= self.p_max <= 1.0:
            raise MissingnessError(f"p_max must be in [0, 1], got {self.p_max}")

    def p(self, m: str) -> float:
        return getattr(self, f"p_{m}")

    def to_dict(self) -> dict:
        return {
            "p_l": self.p_l,
            "p_a": self.p_a,
            "p_v": self.p_v,
            "available": "".join(m for m in MODALITIES if m in self.available),
            "mode": self.mode,
            "p_max": self.p_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MissingnessSpec":
        return cls(
            p_l=float(d.get("p_l", 0.0)),
            p_a=float(d.get("p_a", 0.0)),
            p_v=float(d.get("p_v", 0.0)),
            available=frozenset(d.get("available", "lav")),
            mode=d.get("mode", "fixed"),
            p_max=float(d.get("p_max", 0.5)),
        )


@dataclass
class MissingnessPattern:
    """Concrete corruption for one sample: per-modality keep masks (True =
    frame kept) plus whole-modality availability flags."""

    frame_mask: dict[str, np.ndarray]
    modality_flag: dict[str, bool]

    def kept(self, m: str) -> np.ndarray:
        """Effective keep mask: all-False when the modality is dropped."""
        if not self.modality_flag[m]:
            return np.zeros_like(self.frame_mask[m])
        return self.frame_mask[m]


def sample_pattern(
    spec: MissingnessSpec,
    t_l: int,
    t_a: int,
    t_v: int,
    rng_seed,
) -> MissingnessPattern:
    """Draw one corruption pattern, deterministically in rng_seed.

    fixed mode: drops exactly round(p_m * T_m) uniformly chosen frames per
    available modality; unavailable modalities are flagged off entirely.
    random_train mode: first draws p_m ~ U(0, p_max) per modality and the
    availability set uniformly from the 7 nonempty subsets, then proceeds as
    in fixed mode.
    """
    rng = np.random.default_rng(rng_seed)
    seq_lens = dict(zip(MODALITIES, (t_l, t_a, t_v)))

    if spec.mode == "fixed":
        if not spec.available:
            raise MissingnessError("fixed-mode spec with empty available set: no information remains")
        available = spec.available
        ratios = {m: spec.p(m) for m in MODALITIES}
    else:
        ratios = {m: rng.uniform(0.0, spec.p_max) for m in MODALITIES}
        available = AVAILABILITY_SUBSETS[rng.integers(len(AVAILABILITY_SUBSETS))]

    frame_mask = {}
    modality_flag = {}
    for m in MODALITIES:
        t_m = seq_lens[m]
        if m in available:
            modality_flag[m] = True
            mask = np.ones(t_m, dtype=bool)
            n_drop = round_half_away(ratios[m] * t_m)
            if n_drop > 0:
                mask[rng.choice(t_m, size=n_drop, replace=False)] = False
            frame_mask[m] = mask
        else:
            modality_flag[m] = False
            frame_mask[m] = np.zeros(t_m, dtype=bool)
    return MissingnessPattern(frame_mask=frame_mask, modality_flag=modality_flag)


def apply_mrm(sample: ModalitySample, pattern: MissingnessPattern) -> ModalitySample:
    """Zero out dropped frames/modalities; returns a new sample, the input is
    untouched.  Idempotent for a given pattern."""
    mats = {}
    for m in MODALITIES:
        x = sample.modality(m)
        mask = pattern.frame_mask[m]
        if mask.shape[0] != x.shape[0]:
            raise MissingnessError(
                f"pattern length {mask.shape[0]} does not match x_{m} sequence length {x.shape[0]}"
            )
        if not pattern.modality_flag[m]:
            mats[m] = np.zeros_like(x)
        else:
            out = x.copy()
            out[~mask] = 0.0
            mats[m] = out
    return ModalitySample(id=sample.id, label=sample.label,
                          x_l=mats["l"], x_a=mats["a"], x_v=mats["v"])


INTRA_RATIOS = tuple(i / 10 for i in range(1, 11))


def test_condition_grid() -> list[MissingnessSpec]:
    """The 17 evaluation conditions: 7 availability subsets at p=0, then 10
    all-modality frame-drop ratios 0.1..1.0.  Stable ordering."""
    grid = [
        MissingnessSpec(available=subset, mode="fixed")
        for subset in AVAILABILITY_SUBSETS
    ]
    grid.extend(
        MissingnessSpec(p_l=p, p_a=p, p_v=p, available=frozenset(MODALITIES), mode="fixed")
        for p in INTRA_RATIOS
    )
    return grid


def condition_label(spec: MissingnessSpec) -> str:
    """Short stable label for a grid condition, e.g. 'inter:la' or 'intra:0.3'."""
    avail = "".join(m for m in MODALITIES if m in spec.available)
    ps = {spec.p(m) for m in MODALITIES}
    if ps == {0.0}:
        return f"inter:{avail}"
    if len(ps) == 1 and avail == "lav":
        return f"intra:{spec.p_l:g}"
    return f"fixed:{avail}:l{spec.p_l:g}a{spec.p_a:g}v{spec.p_v:g}"
