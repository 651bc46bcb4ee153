"""The four training objectives and their pieces.

All functions take float64 torch tensors and return scalar tensors that
support autograd toward the student side; teacher-side inputs are detached
internally so no gradient ever reaches the teacher.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

# Counts cosine-similarity evaluations that hit a zero-norm vector or
# prototype (the similarity is defined as 0 there).  Fully corrupted samples
# early in training are the usual cause.
_zero_norm_count = 0


def zero_norm_warning_count() -> int:
    return _zero_norm_count


def reset_zero_norm_warnings() -> None:
    global _zero_norm_count
    _zero_norm_count = 0


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# sample-level contrastive distillation


def scd_loss(h_s: torch.Tensor, h_t: torch.Tensor, eta: float) -> torch.Tensor:
    """Margin contrastive loss between student and teacher representations
    over a mini-batch.

    Sums, over all ordered pairs (i, j) with j != i, the squared distance of
    the aligned pair i plus the squared hinge max(0, eta - D(h_s_i, h_t_j))
    of the cross pair; each aligned term is therefore counted N-1 times.
    """
    if h_s.shape != h_t.shape:
        raise ValueError(f"shape mismatch: {tuple(h_s.shape)} vs {tuple(h_t.shape)}")
    n = h_s.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    h_t = h_t.detach()

    pos = ((h_s - h_t) ** 2).sum(dim=-1)            # (N,) squared aligned distances
    cross = torch.cdist(h_s, h_t, p=2)              # (N, N) D(h_s_i, h_t_j)
    hinge = torch.clamp(eta - cross, min=0.0) ** 2
    off_diag = ~torch.eye(n, dtype=torch.bool, device=h_s.device)
    return (n - 1) * pos.sum() + hinge[off_diag].sum()


# ---------------------------------------------------------------------------
# category-guided prototype distillation


@dataclass
class PrototypeTable:
    """Batch-mean representation per category present in the batch."""

    present_categories: list[int]
    prototypes: torch.Tensor  # (C, D)
    counts: list[int]


def category_prototypes(h: torch.Tensor, labels: torch.Tensor) -> PrototypeTable:
    """Arithmetic mean of each present category's representations."""
    if h.shape[0] < 1:
        raise ValueError("empty batch")
    labels = torch.as_tensor(labels, dtype=torch.long)
    present = sorted(int(k) for k in torch.unique(labels))
    protos, counts = [], []
    for k in present:
        members = h[labels == k]
        protos.append(members.mean(dim=0))
        counts.append(members.shape[0])
    return PrototypeTable(present_categories=present,
                          prototypes=torch.stack(protos), counts=counts)


def _cosine_matrix(h: torch.Tensor, table: PrototypeTable) -> torch.Tensor:
    """(N, C) cosine similarities with a zero-norm guard: entries involving a
    zero vector or zero prototype are 0 and counted as warnings."""
    global _zero_norm_count
    h_norm = h.norm(dim=-1, keepdim=True)           # (N, 1)
    c_norm = table.prototypes.norm(dim=-1)          # (C,)
    dots = h @ table.prototypes.T                   # (N, C)
    denom = h_norm * c_norm.unsqueeze(0)
    bad = denom == 0
    n_bad = int(bad.sum())
    if n_bad:
        _zero_norm_count += n_bad
    safe = torch.where(bad, torch.ones_like(denom), denom)
    return torch.where(bad, torch.zeros_like(dots), dots / safe)


def similarity_row(h_i: torch.Tensor, table: PrototypeTable) -> torch.Tensor:
    """Cosine similarity of one representation to every present prototype."""
    return _cosine_matrix(h_i.unsqueeze(0), table).squeeze(0)


def cpd_loss(h_s: torch.Tensor, h_t: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean absolute difference between the student's and teacher's
    sample-to-prototype cosine similarity matrices.

    Each side builds prototypes from its own representations with the shared
    labels; the mean runs over N x K entries where K is the number of
    categories present in the batch.
    """
    if h_s.shape != h_t.shape:
        raise ValueError(f"shape mismatch: {tuple(h_s.shape)} vs {tuple(h_t.shape)}")
    h_t = h_t.detach()
    m_s = _cosine_matrix(h_s, category_prototypes(h_s, labels))
    m_t = _cosine_matrix(h_t, category_prototypes(h_t, labels))
    return (m_s - m_t).abs().mean()


# ---------------------------------------------------------------------------
# response decoupling and the JSD mutual-information estimator


@dataclass
class DecoupledResponse:
    """Softmax response split at the target index: scalar target-category
    probability plus the non-target probabilities in original order, not
    renormalized."""

    tcr: torch.Tensor   # () scalar
    ntcr: torch.Tensor  # (K-1,)


def decouple_response(r, y: int) -> DecoupledResponse:
    """Split a probability vector into its target and non-target parts."""
    probs = getattr(r, "probs", r)
    probs = torch.as_tensor(probs)
    k = probs.shape[-1]
    if not 0 <= y < k:
        raise ValueError(f"target index {y} out of range for {k} classes")
    idx = torch.arange(k) != y
    return DecoupledResponse(tcr=probs[y], ntcr=probs[idx])


def reconstruct_response(d: DecoupledResponse, y: int) -> torch.Tensor:
    """Inverse of decouple_response: reinsert the target probability at y."""
    k = d.ntcr.shape[-1] + 1
    probs = torch.empty(k, dtype=d.ntcr.dtype)
    probs[torch.arange(k) != y] = d.ntcr
    probs[y] = d.tcr
    return probs


def _decouple_batch(probs: torch.Tensor, y: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """(N, K) probs -> ((N, 1) target part, (N, K-1) non-target part)."""
    n, k = probs.shape
    tcr = probs.gather(1, y.view(-1, 1))
    keep = torch.ones_like(probs, dtype=torch.bool)
    keep.scatter_(1, y.view(-1, 1), False)
    ntcr = probs[keep].view(n, k - 1)
    return tcr, ntcr


@dataclass(frozen=True)
class StatNetConfig:
    input_dim: int
    hidden_dim: int = 64
    num_layers: int = 2

    def to_dict(self) -> dict:
        return {"input_dim": self.input_dim, "hidden_dim": self.hidden_dim,
                "num_layers": self.num_layers}

    @classmethod
    def from_dict(cls, d: dict) -> "StatNetConfig":
        return cls(input_dim=int(d["input_dim"]), hidden_dim=int(d["hidden_dim"]),
                   num_layers=int(d["num_layers"]))


class StatNet(nn.Module):
    """Scalar-output critic over concatenated (q, u) pairs, used by the
    mutual-information estimator.  Tanh keeps it smooth for gradient checks."""

    def __init__(self, config: StatNetConfig):
        super().__init__()
        layers: list[nn.Module] = []
        width = config.input_dim
        for _ in range(config.num_layers):
            layers += [nn.Linear(width, config.hidden_dim), nn.Tanh()]
            width = config.hidden_dim
        layers.append(nn.Linear(width, 1))
        self.net = nn.Sequential(*layers)
        self.config = config
        self.double()

    def forward(self, q: torch.Tensor, u: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([q, u], dim=-1)).squeeze(-1)


def build_statnet(config: StatNetConfig, seed: int) -> StatNet:
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        net = StatNet(config)
    return net


def random_derangement(n: int, rng) -> np.ndarray:
    """Uniform random permutation of range(n) with no fixed points."""
    if n < 2:
        raise ValueError(f"derangement needs n >= 2, got {n}")
    rng = _as_rng(rng)
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == np.arange(n)):
            return perm


def jsd_mi_estimate(
    q: torch.Tensor, u: torch.Tensor, statnet: nn.Module, perm
) -> torch.Tensor:
    """Jensen-Shannon lower bound on the mutual information of (q, u).

    The joint expectation is taken over aligned rows, the product-of-marginals
    expectation over rows of q paired with perm-shuffled rows of u; perm must
    be a derangement so no joint pair leaks into the product term.  Always
    <= 0 regardless of the critic.
    """
    q = torch.as_tensor(q)
    u = torch.as_tensor(u)
    if q.ndim == 1:
        q = q.unsqueeze(1)
    if u.ndim == 1:
        u = u.unsqueeze(1)
    n = q.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    perm = np.asarray(perm)
    if perm.shape != (n,) or sorted(perm.tolist()) != list(range(n)):
        raise ValueError("perm must be a permutation of range(N)")
    if np.any(perm == np.arange(n)):
        raise ValueError("perm must have no fixed points (derangement)")
    joint = -F.softplus(-statnet(q, u)).mean()
    product = F.softplus(statnet(q, u[perm])).mean()
    return joint - product


def rcd_loss(
    probs_t: torch.Tensor,
    probs_s: torch.Tensor,
    y: torch.Tensor,
    statnet_t: nn.Module,
    statnet_nt: nn.Module,
    rng,
    ntcr_renormalize: bool = False,
) -> torch.Tensor:
    """Response-consistency loss: negated mutual-information estimates
    between the teacher/student target parts and non-target parts.

    A fresh derangement (drawn from rng) forms the product-term pairing,
    shared by both estimates.  Gradients flow to the student probabilities
    and both critics; the teacher side is constant.
    """
    probs_t = torch.as_tensor(probs_t).detach()
    probs_s = torch.as_tensor(probs_s)
    y = torch.as_tensor(y, dtype=torch.long)
    n = probs_s.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    tcr_t, ntcr_t = _decouple_batch(probs_t, y)
    tcr_s, ntcr_s = _decouple_batch(probs_s, y)
    if ntcr_renormalize:
        ntcr_t = ntcr_t / (1.0 - tcr_t).clamp_min(1e-12)
        ntcr_s = ntcr_s / (1.0 - tcr_s).clamp_min(1e-12)
    perm = random_derangement(n, rng)
    est_t = jsd_mi_estimate(tcr_t, tcr_s, statnet_t, perm)
    est_nt = jsd_mi_estimate(ntcr_t, ntcr_s, statnet_nt, perm)
    return -est_t - est_nt


# ---------------------------------------------------------------------------
# task loss and the total objective


def task_loss(logits: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy of the target class, computed from logits."""
    y = torch.as_tensor(y, dtype=torch.long)
    return F.cross_entropy(logits, y)


@dataclass
class LossBreakdown:
    """Per-component contributions (after weighting) plus their sum."""

    task: float
    scd: float
    cpd: float
    rcd: float
    total: float

    def as_dict(self) -> dict:
        return {"task": self.task, "scd": self.scd, "cpd": self.cpd,
                "rcd": self.rcd, "total": self.total}


def total_loss(
    task, scd, cpd, rcd, weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
) -> tuple[torch.Tensor, LossBreakdown]:
    """Weighted sum of the four components (weights default to 1).

    Returns the total as a tensor preserving the autograd graph, plus a float
    breakdown of the weighted contributions.
    """
    names = ("task", "scd", "cpd", "rcd")
    comps = (task, scd, cpd, rcd)
    if len(weights) != 4:
        raise ValueError(f"expected 4 weights, got {len(weights)}")
    weighted = []
    for name, comp, w in zip(names, comps, weights):
        val = torch.as_tensor(comp, dtype=torch.float64) if not torch.is_tensor(comp) else comp
        if not torch.isfinite(val):
            raise ValueError(f"non-finite {name} loss: {float(val.detach())}")
        if w < 0:
            raise ValueError(f"negative weight for {name}: {w}")
        weighted.append(w * val)
    total = weighted[0] + weighted[1] + weighted[2] + weighted[3]
    floats = [float(v.detach()) for v in weighted]
    return total, LossBreakdown(*floats, total=float(total.detach()))
