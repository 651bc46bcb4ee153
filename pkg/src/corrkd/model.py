"""Shared teacher/student network.

Per modality: 1-D temporal convolution (d_m -> d channels, same length) plus
sinusoidal positional embedding, then one transformer encoder shared across
the three modalities.  The encoded sequences are concatenated on the feature
axis and mean-pooled over time into the joint representation (length 3d),
which a two-layer head maps to class logits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from corrkd.datasets import MODALITIES, ModalitySample


@dataclass(frozen=True)
class FusionNetConfig:
    d: int = 40
    num_heads: int = 10
    num_layers: int = 2
    ffn_dim: int = 160
    dropout: float = 0.1
    num_classes: int = 4
    conv_kernel: int = 3
    feature_dims: tuple[int, int, int] = (12, 8, 6)

    def __post_init__(self):
        object.__setattr__(self, "feature_dims", tuple(int(n) for n in self.feature_dims))
        if self.d % self.num_heads != 0:
            raise ValueError(f"d={self.d} must be divisible by num_heads={self.num_heads}")
        if self.conv_kernel < 1 or self.conv_kernel % 2 == 0:
            raise ValueError(f"conv_kernel must be odd and positive, got {self.conv_kernel}")
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "num_heads": self.num_heads,
            "num_layers": self.num_layers,
            "ffn_dim": self.ffn_dim,
            "dropout": self.dropout,
            "num_classes": self.num_classes,
            "conv_kernel": self.conv_kernel,
            "feature_dims": list(self.feature_dims),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FusionNetConfig":
        return cls(
            d=int(d["d"]),
            num_heads=int(d["num_heads"]),
            num_layers=int(d["num_layers"]),
            ffn_dim=int(d["ffn_dim"]),
            dropout=float(d["dropout"]),
            num_classes=int(d["num_classes"]),
            conv_kernel=int(d["conv_kernel"]),
            feature_dims=tuple(d["feature_dims"]),
        )


def positional_embedding(t: int, d: int, dtype=torch.float64) -> torch.Tensor:
    """(t, d) sinusoidal table: even dims sin, odd dims cos, frequencies
    10000^(-2i/d)."""
    position = torch.arange(t, dtype=dtype).unsqueeze(1)
    freq = torch.exp(torch.arange(0, d, 2, dtype=dtype) * (-math.log(10000.0) / d))
    pe = torch.zeros(t, d, dtype=dtype)
    pe[:, 0::2] = torch.sin(position * freq)
    pe[:, 1::2] = torch.cos(position * freq[: d // 2])
    return pe


class FusionNet(nn.Module):
    """Three-modality fusion classifier; teacher and student instantiate this
    same class with independent parameters."""

    def __init__(self, config: FusionNetConfig):
        super().__init__()
        self.config = config
        pad = config.conv_kernel // 2
        self.convs = nn.ModuleDict(
            {
                m: nn.Conv1d(d_m, config.d, kernel_size=config.conv_kernel, padding=pad)
                for m, d_m in zip(MODALITIES, config.feature_dims)
            }
        )
        layer = nn.TransformerEncoderLayer(
            d_model=config.d,
            nhead=config.num_heads,
            dim_feedforward=config.ffn_dim,
            dropout=config.dropout,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            layer,
            num_layers=config.num_layers,
            norm=nn.LayerNorm(config.d),
            enable_nested_tensor=False,
        )
        h_dim = 3 * config.d
        self.head = nn.Sequential(
            nn.Linear(h_dim, h_dim),
            nn.GELU(),
            nn.Linear(h_dim, config.num_classes),
        )
        self.double()

    def embed(self, x: torch.Tensor, m: str) -> torch.Tensor:
        """(N, T, d_m) -> (N, T, d): temporal convolution plus positional
        embedding."""
        d_m = dict(zip(MODALITIES, self.config.feature_dims))[m]
        if x.ndim != 3 or x.shape[-1] != d_m:
            raise ValueError(
                f"x_{m} must have shape (N, T, {d_m}), got {tuple(x.shape)}"
            )
        f = self.convs[m](x.transpose(1, 2)).transpose(1, 2)
        pe = positional_embedding(f.shape[1], self.config.d, dtype=f.dtype).to(f.device)
        return f + pe

    def encode(self, f: torch.Tensor) -> torch.Tensor:
        """(N, T, d) -> (N, T, d), shape-preserving self-attention stack."""
        return self.encoder(f)

    def fuse(self, e_l: torch.Tensor, e_a: torch.Tensor, e_v: torch.Tensor) -> torch.Tensor:
        """Concatenate along the feature axis and mean-pool over time:
        three (N, T, d) -> (N, 3d)."""
        lens = {e_l.shape[1], e_a.shape[1], e_v.shape[1]}
        if len(lens) != 1:
            raise ValueError(
                f"modalities have unequal sequence lengths {sorted(lens)}; "
                "pad or truncate them first (see the --pad-to-max option)"
            )
        z = torch.cat([e_l, e_a, e_v], dim=-1)
        return z.mean(dim=1)

    def respond(self, h: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """(N, 3d) -> (logits, probs), each (N, K)."""
        logits = self.head(h)
        return logits, torch.softmax(logits, dim=-1)

    def forward(
        self, x_l: torch.Tensor, x_a: torch.Tensor, x_v: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Full pass: returns (joint representation (N, 3d), logits, probs)."""
        encoded = [
            self.encode(self.embed(x, m))
            for m, x in zip(MODALITIES, (x_l, x_a, x_v))
        ]
        h = self.fuse(*encoded)
        logits, probs = self.respond(h)
        return h, logits, probs


def build_fusion_net(config: FusionNetConfig, seed: int) -> FusionNet:
    """Construct a net with parameters drawn deterministically from seed,
    without disturbing the global RNG."""
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        net = FusionNet(config)
    return net


def batch_to_tensors(
    samples: list[ModalitySample], pad_to_max: bool = False
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Stack samples into (x_l, x_a, x_v, labels) float64 tensors.

    With pad_to_max, shorter modalities are zero-padded on the time axis to
    the longest one so the feature-axis concatenation downstream is legal.
    """
    if not samples:
        raise ValueError("empty batch")
    mats = {m: [s.modality(m) for s in samples] for m in MODALITIES}
    if pad_to_max:
        t_max = max(x.shape[0] for xs in mats.values() for x in xs)
        for m in MODALITIES:
            mats[m] = [
                np.pad(x, ((0, t_max - x.shape[0]), (0, 0))) for x in mats[m]
            ]
    tensors = tuple(
        torch.from_numpy(np.stack(mats[m]).astype(np.float64)) for m in MODALITIES
    )
    labels = torch.tensor([s.label for s in samples], dtype=torch.long)
    return (*tensors, labels)
