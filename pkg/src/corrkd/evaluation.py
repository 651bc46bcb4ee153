"""Evaluation metrics and missing-modality robustness sweeps.

A sweep replays a fixed grid of test-time corruption conditions (whole
modalities withheld, or a common frame-drop ratio applied to all three) over
one or more seeds, reports accuracy and weighted F1 per condition, and
aggregates the six partial-availability conditions into an average row per
seed.  Reports round-trip through CSV, with a companion curve file for the
frame-drop ratio axis.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from corrkd.corruption import (
    INTRA_RATIOS,
    MissingnessSpec,
    apply_mrm,
    condition_label,
    sample_pattern,
    test_condition_grid,
)
from corrkd.datasets import Dataset, ModalitySample, batch_iter

# The six ways to withhold at least one but not every modality.
PARTIAL_INTER_LABELS = (
    "inter:l", "inter:a", "inter:v", "inter:la", "inter:lv", "inter:av",
)
AVG_CONDITION = "avg:inter_missing"


def accuracy(preds: np.ndarray, labels: np.ndarray) -> float:
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape or preds.ndim != 1:
        raise ValueError(f"preds/labels must be matching 1-D arrays, got {preds.shape} vs {labels.shape}")
    if preds.size == 0:
        raise ValueError("cannot score an empty prediction set")
    return float(np.mean(preds == labels))


def per_class_f1(preds: np.ndarray, labels: np.ndarray, num_classes: int) -> np.ndarray:
    """One-vs-rest F1 per class; a class with no predictions and no true
    samples scores 0 by convention."""
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    out = np.zeros(num_classes, dtype=np.float64)
    for k in range(num_classes):
        tp = np.sum((preds == k) & (labels == k))
        fp = np.sum((preds == k) & (labels != k))
        fn = np.sum((preds != k) & (labels == k))
        denom = 2 * tp + fp + fn
        out[k] = 2 * tp / denom if denom > 0 else 0.0
    return out


def weighted_f1(preds: np.ndarray, labels: np.ndarray, num_classes: int) -> float:
    """Support-weighted mean of per-class F1 (classes absent from labels
    carry zero weight)."""
    labels = np.asarray(labels)
    f1 = per_class_f1(preds, labels, num_classes)
    support = np.bincount(labels, minlength=num_classes).astype(np.float64)
    if support.sum() == 0:
        raise ValueError("cannot score an empty label set")
    return float(np.dot(f1, support) / support.sum())


@dataclass
class MetricsRow:
    condition: str
    p: float
    available: str
    acc: float
    wf1: float
    f1_per_class: list[float]
    n: int
    seed: int


@dataclass
class RobustnessReport:
    rows: list[MetricsRow]
    averages: list[MetricsRow]  # one per seed over the six partial conditions
    monotone_by_seed: dict[int, bool] = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return len(self.rows[0].f1_per_class)

    def mean_partial_wf1(self) -> float:
        return float(np.mean([r.wf1 for r in self.averages]))

    def rows_for(self, condition: str) -> list[MetricsRow]:
        return [r for r in self.rows if r.condition == condition]


def _corruption_seed(run_seed: int, sample_id: str, label: str) -> int:
    """Stable per-sample seed (Python's hash() is randomized per process)."""
    digest = hashlib.blake2b(
        f"{run_seed}:{sample_id}:{label}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def _corrupt_for_eval(samples: list[ModalitySample], spec: MissingnessSpec,
                      seed: int) -> list[ModalitySample]:
    label = condition_label(spec)
    out = []
    for s in samples:
        pat = sample_pattern(
            spec, s.x_l.shape[0], s.x_a.shape[0], s.x_v.shape[0],
            _corruption_seed(seed, s.id, label),
        )
        out.append(apply_mrm(s, pat))
    return out


def _predict(net, samples: list[ModalitySample], batch_size: int = 256) -> np.ndarray:
    from corrkd.model import batch_to_tensors

    preds = []
    net.eval()
    with torch.no_grad():
        for batch in batch_iter(samples, batch_size):
            x_l, x_a, x_v, _ = batch_to_tensors(batch)
            _, logits, _ = net(x_l, x_a, x_v)
            preds.append(logits.argmax(dim=1).numpy())
    return np.concatenate(preds)


def _spec_p(spec: MissingnessSpec) -> float:
    # The grid uses one common ratio across modalities; report the largest
    # so inter conditions (all ratios zero) read as p=0.
    return max(spec.p_l, spec.p_a, spec.p_v)


def _evaluate_net(net, samples: list[ModalitySample], spec: MissingnessSpec,
                  seed: int, num_classes: int) -> MetricsRow:
    if spec.mode != "fixed":
        raise ValueError(f"evaluation needs a fixed-mode spec, got mode={spec.mode!r}")
    if not samples:
        raise ValueError("cannot evaluate on an empty sample list")
    corrupted = _corrupt_for_eval(samples, spec, seed)
    preds = _predict(net, corrupted)
    labels = np.array([s.label for s in samples])
    return MetricsRow(
        condition=condition_label(spec),
        p=_spec_p(spec),
        available="".join(m for m in "lav" if m in spec.available),
        acc=accuracy(preds, labels),
        wf1=weighted_f1(preds, labels, num_classes),
        f1_per_class=[float(v) for v in per_class_f1(preds, labels, num_classes)],
        n=len(samples),
        seed=seed,
    )


def evaluate_condition(ckpt, samples: list[ModalitySample],
                       spec: MissingnessSpec, seed: int = 0) -> MetricsRow:
    """Score a checkpoint on one deterministic corruption condition."""
    from corrkd.distill import net_from_checkpoint

    net = net_from_checkpoint(ckpt, use_best=True)
    return _evaluate_net(net, samples, spec, seed, ckpt.train_config.net.num_classes)


def robustness_sweep(ckpt, dataset: Dataset, seeds: tuple[int, ...] = (0, 1, 2),
                     split: str = "test", jobs: int = 1) -> RobustnessReport:
    """Run the full 17-condition grid per seed and aggregate.

    The average row per seed covers the six partial-availability conditions;
    monotone_by_seed records whether weighted F1 at drop ratio 0.1 is at
    least its value at ratio 1.0 for that seed.  jobs > 1 scores conditions
    on a thread pool; results are identical either way because every cell is
    an independent deterministic computation.
    """
    from corrkd.distill import net_from_checkpoint

    if not seeds:
        raise ValueError("need at least one seed")
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    net = net_from_checkpoint(ckpt, use_best=True)
    k = ckpt.train_config.net.num_classes
    samples = dataset.split(split)
    rows: list[MetricsRow] = []
    averages: list[MetricsRow] = []
    monotone: dict[int, bool] = {}
    for seed in seeds:
        grid = test_condition_grid()
        if jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=jobs) as pool:
                seed_rows = list(pool.map(
                    lambda spec: _evaluate_net(net, samples, spec, seed, k), grid
                ))
        else:
            seed_rows = [_evaluate_net(net, samples, spec, seed, k) for spec in grid]
        rows.extend(seed_rows)
        partial = [r for r in seed_rows if r.condition in PARTIAL_INTER_LABELS]
        averages.append(MetricsRow(
            condition=AVG_CONDITION,
            p=0.0,
            available="",
            acc=float(np.mean([r.acc for r in partial])),
            wf1=float(np.mean([r.wf1 for r in partial])),
            f1_per_class=[float(v) for v in
                          np.mean([r.f1_per_class for r in partial], axis=0)],
            n=partial[0].n,
            seed=seed,
        ))
        by_label = {r.condition: r for r in seed_rows}
        monotone[seed] = by_label["intra:0.1"].wf1 >= by_label["intra:1"].wf1
    return RobustnessReport(rows=rows, averages=averages, monotone_by_seed=monotone)


def report_header(num_classes: int) -> list[str]:
    return (["condition", "p", "available", "acc", "wf1"]
            + [f"f1_class{k}" for k in range(num_classes)]
            + ["n", "seed"])


def curve_path(report_path: Path | str) -> Path:
    report_path = Path(report_path)
    return report_path.with_name(report_path.stem + "_curve.csv")


def write_report(report: RobustnessReport, path: Path | str) -> None:
    """CSV of all rows (grid rows then per-seed averages) plus a companion
    `<stem>_curve.csv` of drop ratio vs mean weighted F1 across seeds."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    k = report.num_classes
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(report_header(k))
        for row in report.rows + report.averages:
            w.writerow(
                [row.condition, f"{row.p:.9g}", row.available,
                 f"{row.acc:.9g}", f"{row.wf1:.9g}"]
                + [f"{v:.9g}" for v in row.f1_per_class]
                + [row.n, row.seed]
            )
    with open(curve_path(path), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["p", "mean_wf1"])
        for p in INTRA_RATIOS:
            label = f"intra:{p:g}"
            vals = [r.wf1 for r in report.rows if r.condition == label]
            w.writerow([f"{p:g}", f"{float(np.mean(vals)):.9g}"])


def read_report(path: Path | str) -> RobustnessReport:
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        f1_cols = [h for h in header if h.startswith("f1_class")]
        if not f1_cols or header[:5] != ["condition", "p", "available", "acc", "wf1"]:
            raise ValueError(f"{path} is not a sweep report")
        rows, averages = [], []
        for rec in reader:
            row = MetricsRow(
                condition=rec[0],
                p=float(rec[1]),
                available=rec[2],
                acc=float(rec[3]),
                wf1=float(rec[4]),
                f1_per_class=[float(v) for v in rec[5:5 + len(f1_cols)]],
                n=int(rec[5 + len(f1_cols)]),
                seed=int(rec[6 + len(f1_cols)]),
            )
            (averages if row.condition == AVG_CONDITION else rows).append(row)
    monotone = {}
    for row in averages:
        s = row.seed
        by_label = {r.condition: r for r in rows if r.seed == s}
        if "intra:0.1" in by_label and "intra:1" in by_label:
            monotone[s] = by_label["intra:0.1"].wf1 >= by_label["intra:1"].wf1
    return RobustnessReport(rows=rows, averages=averages, monotone_by_seed=monotone)


def format_report_table(report: RobustnessReport) -> str:
    """Human-readable table: one line per condition, averaged over seeds."""
    lines = []
    seeds = sorted({r.seed for r in report.rows})
    lines.append(f"seeds: {', '.join(str(s) for s in seeds)}")
    lines.append(f"{'condition':<14} {'p':>4} {'avail':>6} {'acc':>8} {'wf1':>8}")
    order = [condition_label(spec) for spec in test_condition_grid()]
    for label in order:
        rs = report.rows_for(label)
        if not rs:
            continue
        lines.append(
            f"{label:<14} {rs[0].p:>4.1f} {rs[0].available or '-':>6} "
            f"{np.mean([r.acc for r in rs]):>8.4f} {np.mean([r.wf1 for r in rs]):>8.4f}"
        )
    if report.averages:
        lines.append(
            f"{'Avg. (partial)':<14} {'-':>4} {'-':>6} "
            f"{np.mean([r.acc for r in report.averages]):>8.4f} "
            f"{np.mean([r.wf1 for r in report.averages]):>8.4f}"
        )
    for s in seeds:
        if s in report.monotone_by_seed:
            flag = "yes" if report.monotone_by_seed[s] else "NO"
            lines.append(f"wf1(p=0.1) >= wf1(p=1.0) for seed {s}: {flag}")
    return "\n".join(lines)
