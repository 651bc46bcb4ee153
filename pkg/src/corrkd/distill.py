"""Two-phase training workflow.

Phase one trains the teacher on complete samples with the task loss only and
freezes it.  Phase two trains a student of identical architecture on
randomly corrupted versions of the same samples, distilling from the frozen
teacher through the contrastive, prototype, and response-consistency losses
on top of the task loss.

Everything here is deterministic given the config seed when run
single-threaded at float64: batch order, corruption draws, and derangements
are pure functions of (seed, epoch), and the torch RNG state (dropout) is
checkpointed at epoch boundaries so a resumed run replays the uninterrupted
trajectory exactly.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from copy import deepcopy
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import torch

from corrkd.corruption import MissingnessSpec, apply_mrm, sample_pattern
from corrkd.datasets import Dataset, ModalitySample, batch_iter
from corrkd.evaluation import accuracy, weighted_f1
from corrkd.losses import (
    StatNet,
    StatNetConfig,
    build_statnet,
    cpd_loss,
    rcd_loss,
    scd_loss,
    task_loss,
    total_loss,
)
from corrkd.model import FusionNet, FusionNetConfig, batch_to_tensors, build_fusion_net

CKPT_SCHEMA = 1

# Salts for deriving independent deterministic streams from one run seed.
_SALT_TEACHER, _SALT_STUDENT = 1, 2
_SALT_MRM, _SALT_DERANGE, _SALT_VAL_MRM, _SALT_VAL_DERANGE = 11, 12, 13, 14

METRICS_HEADER = ["epoch", "split", "task", "scd", "cpd", "rcd", "total", "acc", "wf1"]


class CheckpointError(RuntimeError):
    """Unreadable, mismatched, or wrong-schema checkpoint."""


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class TrainConfig:
    net: FusionNetConfig = field(default_factory=FusionNetConfig)
    lr: float = 4e-3
    batch_size: int = 64
    epochs: int = 30
    seed: int = 0
    eta: float = 1.2
    p_max: float = 0.5
    loss_weights: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    grad_clip: float = 5.0
    ntcr_renormalize: bool = False
    statnet_hidden: int = 64
    statnet_layers: int = 2
    early_stop_metric: float | None = None
    mrm: MissingnessSpec | None = None

    def __post_init__(self):
        self.loss_weights = tuple(float(w) for w in self.loss_weights)
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if len(self.loss_weights) != 4 or any(w < 0 for w in self.loss_weights):
            raise ValueError(f"loss_weights must be 4 nonnegative floats, got {self.loss_weights}")
        # p_max is the single source of truth for training corruption
        # intensity; keep a provided random_train spec in sync with it.
        if self.mrm is None:
            self.mrm = MissingnessSpec(mode="random_train", p_max=self.p_max)
        elif self.mrm.mode == "random_train" and self.mrm.p_max != self.p_max:
            self.mrm = replace(self.mrm, p_max=self.p_max)

    def to_dict(self) -> dict:
        return {
            "lr": self.lr,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "eta": self.eta,
            "p_max": self.p_max,
            "loss_weights": list(self.loss_weights),
            "grad_clip": self.grad_clip,
            "ntcr_renormalize": self.ntcr_renormalize,
            "statnet_hidden": self.statnet_hidden,
            "statnet_layers": self.statnet_layers,
            "early_stop_metric": self.early_stop_metric,
            "net": self.net.to_dict(),
            "mrm": self.mrm.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(
            net=FusionNetConfig.from_dict(d["net"]),
            lr=float(d["lr"]),
            batch_size=int(d["batch_size"]),
            epochs=int(d["epochs"]),
            seed=int(d["seed"]),
            eta=float(d["eta"]),
            p_max=float(d["p_max"]),
            loss_weights=tuple(d["loss_weights"]),
            grad_clip=float(d["grad_clip"]),
            ntcr_renormalize=bool(d["ntcr_renormalize"]),
            statnet_hidden=int(d["statnet_hidden"]),
            statnet_layers=int(d["statnet_layers"]),
            early_stop_metric=d.get("early_stop_metric"),
            mrm=MissingnessSpec.from_dict(d["mrm"]),
        )


@dataclass
class Checkpoint:
    role: str  # "teacher" | "student"
    train_config: TrainConfig
    epoch: int  # completed epochs
    global_step: int
    params: dict[str, dict]  # component name -> state_dict (current)
    best_params: dict[str, dict]
    best_epoch: int
    best_metric: float
    optim_state: dict
    torch_rng_state: torch.Tensor
    history: list[dict]
    teacher_hash: str | None = None
    schema_version: int = CKPT_SCHEMA


def param_hash(params: dict[str, dict]) -> str:
    """Stable content hash over named state dicts (order-independent)."""
    h = hashlib.sha256()
    for comp in sorted(params):
        h.update(comp.encode())
        sd = params[comp]
        for key in sorted(sd):
            t = sd[key]
            h.update(key.encode())
            h.update(str(t.dtype).encode())
            h.update(str(tuple(t.shape)).encode())
            h.update(t.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def save_checkpoint(ckpt: Checkpoint, path: Path | str) -> None:
    """Write atomically; everything round-trips exactly (tensors bit-wise)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema_version": ckpt.schema_version,
        "role": ckpt.role,
        "train_config": ckpt.train_config.to_dict(),
        "epoch": ckpt.epoch,
        "global_step": ckpt.global_step,
        "params": ckpt.params,
        "best_params": ckpt.best_params,
        "best_epoch": ckpt.best_epoch,
        "best_metric": ckpt.best_metric,
        "optim_state": ckpt.optim_state,
        "torch_rng_state": ckpt.torch_rng_state,
        "history": ckpt.history,
        "teacher_hash": ckpt.teacher_hash,
    }
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    os.replace(tmp, path)


def load_checkpoint(path: Path | str, expect_role: str | None = None) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, weights_only=True)
    except Exception as e:  # torch surfaces many error types for corrupt files
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(payload, dict) or "schema_version" not in payload:
        raise CheckpointError(f"{path} is not a checkpoint file")
    if payload["schema_version"] != CKPT_SCHEMA:
        raise CheckpointError(
            f"checkpoint schema {payload['schema_version']} unsupported, expected {CKPT_SCHEMA}"
        )
    if expect_role is not None and payload["role"] != expect_role:
        raise CheckpointError(f"expected a {expect_role} checkpoint, got role={payload['role']!r}")
    return Checkpoint(
        role=payload["role"],
        train_config=TrainConfig.from_dict(payload["train_config"]),
        epoch=payload["epoch"],
        global_step=payload["global_step"],
        params=payload["params"],
        best_params=payload["best_params"],
        best_epoch=payload["best_epoch"],
        best_metric=payload["best_metric"],
        optim_state=payload["optim_state"],
        torch_rng_state=payload["torch_rng_state"],
        history=payload["history"],
        teacher_hash=payload.get("teacher_hash"),
    )


def net_from_checkpoint(ckpt: Checkpoint, use_best: bool = True) -> FusionNet:
    """Rebuild the network in eval mode from a checkpoint's (best) params."""
    net = FusionNet(ckpt.train_config.net)
    source = ckpt.best_params if use_best and ckpt.best_params else ckpt.params
    net.load_state_dict(source["model"])
    net.eval()
    return net


def write_metrics_csv(history: list[dict], path: Path | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(METRICS_HEADER)
        for row in history:
            w.writerow([row[k] for k in METRICS_HEADER])


def _derived_seeds(seed: int, salt: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence([seed, salt]).generate_state(n)]


def _seq_lens(sample: ModalitySample) -> tuple[int, int, int]:
    return (sample.x_l.shape[0], sample.x_a.shape[0], sample.x_v.shape[0])


def _corrupt(samples: list[ModalitySample], spec: MissingnessSpec, rng) -> list[ModalitySample]:
    return [apply_mrm(s, sample_pattern(spec, *_seq_lens(s), rng)) for s in samples]


def _corrupt_fixed(samples: list[ModalitySample], spec: MissingnessSpec, seed: int, salt: int):
    """Per-sample corruption with seeds independent of epoch, so validation
    sees the same corrupted set every time."""
    return [
        apply_mrm(s, sample_pattern(spec, *_seq_lens(s), [seed, salt, i]))
        for i, s in enumerate(samples)
    ]


def _check_dataset(dataset: Dataset) -> None:
    if not dataset.train or not dataset.valid:
        raise ValueError("dataset must have nonempty train and valid splits")


def _predictions(net: FusionNet, samples: list[ModalitySample], batch_size: int = 256) -> np.ndarray:
    preds = []
    with torch.no_grad():
        for batch in batch_iter(samples, batch_size):
            x_l, x_a, x_v, _ = batch_to_tensors(batch)
            _, logits, _ = net(x_l, x_a, x_v)
            preds.append(logits.argmax(dim=1).numpy())
    return np.concatenate(preds)


def _metric_row(epoch: int, split: str, comp: dict, acc: float, wf1: float) -> dict:
    return {
        "epoch": epoch, "split": split,
        "task": comp.get("task", 0.0), "scd": comp.get("scd", 0.0),
        "cpd": comp.get("cpd", 0.0), "rcd": comp.get("rcd", 0.0),
        "total": comp.get("total", 0.0), "acc": acc, "wf1": wf1,
    }


def _finite_or_diverged(total: torch.Tensor, role: str, epoch: int, step: int) -> None:
    if not torch.isfinite(total):
        raise TrainingDivergedError(
            f"{role} training diverged: non-finite loss {float(total.detach())} "
            f"at epoch {epoch}, step {step}"
        )


# ---------------------------------------------------------------------------
# teacher


def _validate_teacher(net: FusionNet, samples: list[ModalitySample], k: int,
                      batch_size: int) -> tuple[dict, float, float]:
    net.eval()
    losses, labels, preds = [], [], []
    with torch.no_grad():
        for batch in batch_iter(samples, batch_size):
            x_l, x_a, x_v, y = batch_to_tensors(batch)
            _, logits, _ = net(x_l, x_a, x_v)
            losses.append(float(task_loss(logits, y)) * len(batch))
            preds.append(logits.argmax(dim=1).numpy())
            labels.append(y.numpy())
    preds = np.concatenate(preds)
    labels = np.concatenate(labels)
    task = sum(losses) / len(samples)
    return ({"task": task, "total": task},
            accuracy(preds, labels), weighted_f1(preds, labels, k))


def train_teacher(
    dataset: Dataset,
    cfg: TrainConfig,
    metrics_path: Path | str | None = None,
    resume: Checkpoint | None = None,
) -> Checkpoint:
    """Train the teacher on complete data with the task loss only.

    Keeps the parameters of the best-validation-accuracy epoch alongside the
    final ones.  Deterministic given cfg.seed (single-threaded float64).
    """
    torch.set_num_threads(1)
    _check_dataset(dataset)
    k = cfg.net.num_classes
    init_seed, torch_seed = _derived_seeds(cfg.seed, _SALT_TEACHER, 2)

    net = build_fusion_net(cfg.net, init_seed)
    optim = torch.optim.Adam(net.parameters(), lr=cfg.lr)

    if resume is not None:
        if resume.role != "teacher":
            raise CheckpointError(f"resume checkpoint has role {resume.role!r}, expected teacher")
        if resume.train_config.net != cfg.net:
            raise CheckpointError("resume checkpoint network config does not match")
        net.load_state_dict(resume.params["model"])
        optim.load_state_dict(resume.optim_state)
        torch.set_rng_state(resume.torch_rng_state)
        start_epoch, gstep = resume.epoch, resume.global_step
        history = list(resume.history)
        best = {"params": resume.best_params, "epoch": resume.best_epoch,
                "metric": resume.best_metric}
    else:
        torch.manual_seed(torch_seed)
        start_epoch, gstep = 0, 0
        comp, acc, wf1 = _validate_teacher(net, dataset.valid, k, cfg.batch_size)
        history = [_metric_row(0, "valid", comp, acc, wf1)]
        best = {"params": {}, "epoch": -1, "metric": -math.inf}

    for epoch in range(start_epoch + 1, cfg.epochs + 1):
        net.train()
        loss_sum, n_seen = 0.0, 0
        train_preds, train_labels = [], []
        for batch in batch_iter(dataset.train, cfg.batch_size, shuffle=True,
                                seed=cfg.seed, epoch=epoch):
            x_l, x_a, x_v, y = batch_to_tensors(batch)
            _, logits, _ = net(x_l, x_a, x_v)
            loss = task_loss(logits, y)
            _finite_or_diverged(loss, "teacher", epoch, gstep)
            optim.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(net.parameters(), cfg.grad_clip)
            optim.step()
            gstep += 1
            loss_sum += float(loss.detach()) * len(batch)
            n_seen += len(batch)
            train_preds.append(logits.argmax(dim=1).numpy())
            train_labels.append(y.numpy())

        tp = np.concatenate(train_preds)
        tl = np.concatenate(train_labels)
        train_task = loss_sum / n_seen
        history.append(_metric_row(epoch, "train", {"task": train_task, "total": train_task},
                                   accuracy(tp, tl), weighted_f1(tp, tl, k)))
        comp, acc, wf1 = _validate_teacher(net, dataset.valid, k, cfg.batch_size)
        history.append(_metric_row(epoch, "valid", comp, acc, wf1))

        # ties go to the later epoch: at equal accuracy the longer-trained
        # parameters are the better distillation source
        if acc >= best["metric"]:
            best = {"params": {"model": deepcopy(net.state_dict())},
                    "epoch": epoch, "metric": acc}
        if metrics_path is not None:
            write_metrics_csv(history, metrics_path)
        if cfg.early_stop_metric is not None and acc >= cfg.early_stop_metric:
            break

    return Checkpoint(
        role="teacher",
        train_config=cfg,
        epoch=epoch if cfg.epochs > start_epoch else start_epoch,
        global_step=gstep,
        params={"model": net.state_dict()},
        best_params=best["params"],
        best_epoch=best["epoch"],
        best_metric=best["metric"],
        optim_state=optim.state_dict(),
        torch_rng_state=torch.get_rng_state(),
        history=history,
    )


# ---------------------------------------------------------------------------
# student


def _statnet_configs(cfg: TrainConfig) -> tuple[StatNetConfig, StatNetConfig]:
    k = cfg.net.num_classes
    mk = lambda dim: StatNetConfig(input_dim=dim, hidden_dim=cfg.statnet_hidden,
                                   num_layers=cfg.statnet_layers)
    return mk(2), mk(2 * (k - 1))


def _student_losses(
    student: FusionNet,
    teacher: FusionNet,
    statnet_t: StatNet,
    statnet_nt: StatNet,
    complete: list[ModalitySample],
    corrupted: list[ModalitySample],
    cfg: TrainConfig,
    derange_rng,
) -> tuple[torch.Tensor, dict]:
    """One paired forward pass and the weighted objective.

    Pair losses (scd, rcd) need at least two samples; on a size-1 batch their
    pair sums are empty and they contribute 0.
    """
    x_l, x_a, x_v, y = batch_to_tensors(corrupted)
    h_s, logits_s, probs_s = student(x_l, x_a, x_v)
    with torch.no_grad():
        cx_l, cx_a, cx_v, _ = batch_to_tensors(complete)
        h_t, _, probs_t = teacher(cx_l, cx_a, cx_v)

    n = len(corrupted)
    w_task, w_scd, w_cpd, w_rcd = cfg.loss_weights
    zero = torch.zeros((), dtype=torch.float64)
    task = task_loss(logits_s, y) if w_task > 0 else zero
    scd = scd_loss(h_s, h_t, cfg.eta) if w_scd > 0 and n >= 2 else zero
    cpd = cpd_loss(h_s, h_t, y) if w_cpd > 0 else zero
    rcd = (
        rcd_loss(probs_t, probs_s, y, statnet_t, statnet_nt, derange_rng,
                 ntcr_renormalize=cfg.ntcr_renormalize)
        if w_rcd > 0 and n >= 2
        else zero
    )
    total, breakdown = total_loss(task, scd, cpd, rcd, cfg.loss_weights)
    stats = breakdown.as_dict()
    stats["logits"] = logits_s
    return total, stats


def _validate_student(
    student: FusionNet,
    teacher: FusionNet,
    statnet_t: StatNet,
    statnet_nt: StatNet,
    samples: list[ModalitySample],
    cfg: TrainConfig,
) -> tuple[dict, float, float]:
    """Validation under a frozen corruption draw (same every epoch)."""
    student.eval()
    corrupted = _corrupt_fixed(samples, cfg.mrm, cfg.seed, _SALT_VAL_MRM)
    derange_rng = np.random.default_rng([cfg.seed, _SALT_VAL_DERANGE])
    sums = {kk: 0.0 for kk in ("task", "scd", "cpd", "rcd", "total")}
    preds, labels = [], []
    n_total = len(samples)
    with torch.no_grad():
        for start in range(0, n_total, cfg.batch_size):
            comp_b = samples[start:start + cfg.batch_size]
            corr_b = corrupted[start:start + cfg.batch_size]
            total, stats = _student_losses(student, teacher, statnet_t, statnet_nt,
                                           comp_b, corr_b, cfg, derange_rng)
            for kk in sums:
                sums[kk] += stats[kk] * len(comp_b)
            preds.append(stats["logits"].argmax(dim=1).numpy())
            labels.append(np.array([s.label for s in comp_b]))
    comp = {kk: v / n_total for kk, v in sums.items()}
    preds = np.concatenate(preds)
    labels = np.concatenate(labels)
    k = cfg.net.num_classes
    return comp, accuracy(preds, labels), weighted_f1(preds, labels, k)


def train_student(
    dataset: Dataset,
    teacher: Checkpoint,
    cfg: TrainConfig,
    metrics_path: Path | str | None = None,
    resume: Checkpoint | None = None,
) -> Checkpoint:
    """Distill the frozen teacher into a student trained on corrupted data.

    Per step: a fresh corruption pattern per sample, teacher forward on the
    complete batch, student forward on the corrupted batch, one optimizer
    step on the weighted sum of task/scd/cpd/rcd over the student and both
    statnets.  Keeps the best-validation-weighted-F1 epoch.  The teacher is
    hash-verified unchanged.
    """
    torch.set_num_threads(1)
    _check_dataset(dataset)
    if teacher.role != "teacher":
        raise CheckpointError(f"expected a teacher checkpoint, got role={teacher.role!r}")
    if teacher.train_config.net != cfg.net:
        raise ValueError(
            "teacher/student config mismatch: "
            f"teacher net {teacher.train_config.net} vs student net {cfg.net}"
        )

    teacher_net = net_from_checkpoint(teacher, use_best=True)
    teacher_net.requires_grad_(False)
    teacher_hash = param_hash({"model": teacher_net.state_dict()})

    init_seed, torch_seed, st_seed, snt_seed = _derived_seeds(cfg.seed, _SALT_STUDENT, 4)
    student = build_fusion_net(cfg.net, init_seed)
    cfg_t, cfg_nt = _statnet_configs(cfg)
    statnet_t = build_statnet(cfg_t, st_seed)
    statnet_nt = build_statnet(cfg_nt, snt_seed)
    trainable = (
        list(student.parameters())
        + list(statnet_t.parameters())
        + list(statnet_nt.parameters())
    )
    optim = torch.optim.Adam(trainable, lr=cfg.lr)

    if resume is not None:
        if resume.role != "student":
            raise CheckpointError(f"resume checkpoint has role {resume.role!r}, expected student")
        if resume.train_config.net != cfg.net:
            raise CheckpointError("resume checkpoint network config does not match")
        student.load_state_dict(resume.params["model"])
        statnet_t.load_state_dict(resume.params["statnet_t"])
        statnet_nt.load_state_dict(resume.params["statnet_nt"])
        optim.load_state_dict(resume.optim_state)
        torch.set_rng_state(resume.torch_rng_state)
        start_epoch, gstep = resume.epoch, resume.global_step
        history = list(resume.history)
        best = {"params": resume.best_params, "epoch": resume.best_epoch,
                "metric": resume.best_metric}
    else:
        torch.manual_seed(torch_seed)
        start_epoch, gstep = 0, 0
        comp, acc, wf1 = _validate_student(student, teacher_net, statnet_t, statnet_nt,
                                           dataset.valid, cfg)
        history = [_metric_row(0, "valid", comp, acc, wf1)]
        best = {"params": {}, "epoch": -1, "metric": -math.inf}

    k = cfg.net.num_classes
    for epoch in range(start_epoch + 1, cfg.epochs + 1):
        student.train()
        statnet_t.train()
        statnet_nt.train()
        mrm_rng = np.random.default_rng([cfg.seed, _SALT_MRM, epoch])
        derange_rng = np.random.default_rng([cfg.seed, _SALT_DERANGE, epoch])
        sums = {kk: 0.0 for kk in ("task", "scd", "cpd", "rcd", "total")}
        n_seen = 0
        train_preds, train_labels = [], []
        for batch in batch_iter(dataset.train, cfg.batch_size, shuffle=True,
                                seed=cfg.seed, epoch=epoch):
            corrupted = _corrupt(batch, cfg.mrm, mrm_rng)
            total, stats = _student_losses(student, teacher_net, statnet_t, statnet_nt,
                                           batch, corrupted, cfg, derange_rng)
            _finite_or_diverged(total, "student", epoch, gstep)
            optim.zero_grad()
            total.backward()
            torch.nn.utils.clip_grad_norm_(trainable, cfg.grad_clip)
            optim.step()
            gstep += 1
            for kk in sums:
                sums[kk] += stats[kk] * len(batch)
            n_seen += len(batch)
            train_preds.append(stats["logits"].argmax(dim=1).numpy())
            train_labels.append(np.array([s.label for s in batch]))

        comp = {kk: v / n_seen for kk, v in sums.items()}
        tp = np.concatenate(train_preds)
        tl = np.concatenate(train_labels)
        history.append(_metric_row(epoch, "train", comp,
                                   accuracy(tp, tl), weighted_f1(tp, tl, k)))
        comp, acc, wf1 = _validate_student(student, teacher_net, statnet_t, statnet_nt,
                                           dataset.valid, cfg)
        history.append(_metric_row(epoch, "valid", comp, acc, wf1))

        if wf1 >= best["metric"]:
            best = {
                "params": {
                    "model": deepcopy(student.state_dict()),
                    "statnet_t": deepcopy(statnet_t.state_dict()),
                    "statnet_nt": deepcopy(statnet_nt.state_dict()),
                },
                "epoch": epoch,
                "metric": wf1,
            }
        if metrics_path is not None:
            write_metrics_csv(history, metrics_path)
        if cfg.early_stop_metric is not None and wf1 >= cfg.early_stop_metric:
            break

    if param_hash({"model": teacher_net.state_dict()}) != teacher_hash:
        raise RuntimeError("teacher parameters changed during student training")
    if any(p.grad is not None for p in teacher_net.parameters()):
        raise RuntimeError("gradient buffers materialized on the frozen teacher")

    return Checkpoint(
        role="student",
        train_config=cfg,
        epoch=epoch if cfg.epochs > start_epoch else start_epoch,
        global_step=gstep,
        params={
            "model": student.state_dict(),
            "statnet_t": statnet_t.state_dict(),
            "statnet_nt": statnet_nt.state_dict(),
        },
        best_params=best["params"],
        best_epoch=best["epoch"],
        best_metric=best["metric"],
        optim_state=optim.state_dict(),
        torch_rng_state=torch.get_rng_state(),
        history=history,
        teacher_hash=teacher_hash,
    )
