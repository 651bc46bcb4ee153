"""Acceptance gate: eight go/no-go checks, one printed verdict line each.

The distillation-vs-baseline, degradation-curve, and ablation checks share
one benchmark: a deliberately hard synthetic dataset (single-frame sequences,
asymmetric feature widths, heavy latent dilution) where a complete-data
teacher has headroom over students trained on corrupted views.  Training all
benchmark students takes ~10 minutes of CPU; everything is cached at module
scope so the cost is paid once.
"""

import dataclasses
import sys
import time

import numpy as np
import pytest
import torch

from corrkd.corruption import (
    MissingnessSpec,
    round_half_away,
    sample_pattern,
)
from corrkd.datasets import DatasetConfig, generate_synthetic
from corrkd.distill import (
    TrainConfig,
    load_checkpoint,
    param_hash,
    save_checkpoint,
    train_student,
    train_teacher,
)
from corrkd.evaluation import robustness_sweep
from corrkd.losses import (
    StatNetConfig,
    build_statnet,
    cpd_loss,
    random_derangement,
    rcd_loss,
    scd_loss,
    task_loss,
)
from corrkd.model import FusionNetConfig
from corrkd.oracles import run_loss_oracles
from helpers import ACCEPTANCE_VERDICTS, fd_gradcheck


def _verdict(passed: bool, name: str, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    line = f"[{status}] {name}: {detail}"
    ACCEPTANCE_VERDICTS.append(line)
    print(line, file=sys.__stdout__, flush=True)


def _note(msg: str) -> None:
    print(f"       ... {msg}", file=sys.__stdout__, flush=True)


# ---------------------------------------------------------------------------
# 1. loss reference values


def test_loss_reference_suite():
    t0 = time.perf_counter()
    results = run_loss_oracles()
    elapsed = time.perf_counter() - t0
    n_pass = sum(r.passed for r in results)
    ok = n_pass == len(results) and elapsed < 5.0
    _verdict(ok, "loss reference suite",
             f"{n_pass}/{len(results)} closed-form checks in {elapsed:.2f}s (limit 5s)")
    for r in results:
        assert r.passed, r.line()
    assert elapsed < 5.0


# ---------------------------------------------------------------------------
# 2. gradient checks


def test_gradient_checks():
    n, dim, k = 4, 6, 3
    seeds = (0, 1, 2, 3, 4)
    t0 = time.perf_counter()
    worst = 0.0
    for s in seeds:
        rng = np.random.default_rng(100 + s)
        h_s = torch.tensor(rng.normal(size=(n, dim))).requires_grad_(True)
        h_t = torch.tensor(rng.normal(size=(n, dim)))
        y = torch.tensor(rng.integers(0, k, size=n))
        worst = max(worst, fd_gradcheck(
            lambda h: scd_loss(h, h_t, eta=1.2), [h_s], rtol=1e-4))
        h2 = torch.tensor(rng.normal(size=(n, dim))).requires_grad_(True)
        worst = max(worst, fd_gradcheck(
            lambda h: cpd_loss(h, h_t, y), [h2], rtol=1e-4))
        logits = torch.tensor(rng.normal(size=(n, k))).requires_grad_(True)
        worst = max(worst, fd_gradcheck(
            lambda x: task_loss(x, y), [logits], rtol=1e-4))

        probs_t = torch.softmax(torch.tensor(rng.normal(size=(n, k))), dim=-1)
        net_t = build_statnet(StatNetConfig(input_dim=2), seed=200 + s)
        net_nt = build_statnet(StatNetConfig(input_dim=2 * (k - 1)), seed=300 + s)
        raw = torch.tensor(rng.normal(size=(n, k))).requires_grad_(True)

        def rcd_of(x, _s=s):
            return rcd_loss(probs_t, torch.softmax(x, dim=-1), y, net_t, net_nt,
                            np.random.default_rng(400 + _s))

        worst = max(worst, fd_gradcheck(rcd_of, [raw], rtol=1e-4))
    elapsed = time.perf_counter() - t0
    ok = elapsed < 30.0
    _verdict(ok, "gradient checks",
             f"scd/cpd/rcd/task vs central differences, N={n} dim={dim} K={k}, "
             f"{len(seeds)} seeds, worst rel err {worst:.2e} (rtol 1e-4), "
             f"{elapsed:.1f}s (limit 30s)")
    assert ok


# ---------------------------------------------------------------------------
# 3. corruption exactness


def test_corruption_exactness():
    t0 = time.perf_counter()
    checked = 0
    for p in (0.0, 0.3, 0.5, 1.0):
        for t in (7, 10):
            spec = MissingnessSpec(p_l=p, p_a=p, p_v=p, mode="fixed")
            pat = sample_pattern(spec, t, t, t, rng_seed=17)
            again = sample_pattern(spec, t, t, t, rng_seed=17)
            for m in "lav":
                dropped = int((~pat.frame_mask[m]).sum())
                assert dropped == round_half_away(p * t), (p, t, m)
                np.testing.assert_array_equal(pat.frame_mask[m], again.frame_mask[m])
                checked += 1
    # zero rows elementwise
    from corrkd.datasets import ModalitySample
    from corrkd.corruption import apply_mrm

    x = {m: np.arange(10 * d, dtype=np.float64).reshape(10, d) + 1.0
         for m, d in zip("lav", (5, 4, 3))}
    sample = ModalitySample(id="s", label=0, x_l=x["l"], x_a=x["a"], x_v=x["v"])
    spec = MissingnessSpec(p_l=0.5, p_a=0.5, p_v=0.5, mode="fixed")
    pat = sample_pattern(spec, 10, 10, 10, rng_seed=3)
    out = apply_mrm(sample, pat)
    for m, mat in (("l", out.x_l), ("a", out.x_a), ("v", out.x_v)):
        for i in range(10):
            if pat.frame_mask[m][i]:
                np.testing.assert_array_equal(mat[i], sample.modality(m)[i])
            else:
                assert np.all(mat[i] == 0.0), (m, i)
    elapsed = time.perf_counter() - t0
    ok = elapsed < 5.0
    _verdict(ok, "corruption exactness",
             f"drop counts for p in (0,0.3,0.5,1.0) x T in (7,10) "
             f"({checked} cells), zero rows elementwise, seed determinism, "
             f"{elapsed:.2f}s (limit 5s)")
    assert ok


# ---------------------------------------------------------------------------
# 4. teacher sanity on the default data preset


def test_teacher_reaches_95_percent_on_default_data():
    t0 = time.perf_counter()
    dataset = generate_synthetic(DatasetConfig())  # 4 classes, 2000/400/600, T=20
    cfg = TrainConfig(net=FusionNetConfig(), epochs=30, early_stop_metric=0.95)
    ckpt = train_teacher(dataset, cfg)
    elapsed = time.perf_counter() - t0
    ok = ckpt.best_metric >= 0.95 and ckpt.epoch <= 30 and elapsed < 600.0
    _verdict(ok, "teacher sanity",
             f"valid acc {ckpt.best_metric:.4f} (need >= 0.95) at epoch "
             f"{ckpt.best_epoch}/{ckpt.epoch}, {elapsed:.0f}s (limit 600s)")
    assert ckpt.best_metric >= 0.95
    assert elapsed < 600.0


# ---------------------------------------------------------------------------
# benchmark shared by the distillation, degradation, and ablation checks


BENCH_DIMS = (14, 5, 2)
BENCH_DATA = DatasetConfig(
    num_classes=4,
    samples_per_split=(240, 600, 1200),
    seq_lens=(1, 1, 1),
    feature_dims=BENCH_DIMS,
    latent_dim=64,
    noise_std=8.0,
    seed=7,
)
BENCH_NET = FusionNetConfig(
    d=40, num_heads=10, num_layers=2, ffn_dim=160, dropout=0.1,
    num_classes=4, feature_dims=BENCH_DIMS,
)
BENCH_STUDENT = TrainConfig(
    net=BENCH_NET, lr=2e-3, batch_size=16, epochs=60, seed=0,
    eta=1.2, p_max=0.5,
)
SEEDS = (0, 1, 2)
VARIANTS = {
    "full": (1.0, 1.0, 1.0, 1.0),
    "baseline": (1.0, 0.0, 0.0, 0.0),
    "no_scd": (1.0, 0.0, 1.0, 1.0),
    "no_cpd": (1.0, 1.0, 0.0, 1.0),
    "no_rcd": (1.0, 1.0, 1.0, 0.0),
}


@pytest.fixture(scope="module")
def bench():
    """Teacher + five student variants x three seeds, each swept on test."""
    t0 = time.perf_counter()
    dataset = generate_synthetic(BENCH_DATA)
    teacher_cfg = dataclasses.replace(BENCH_STUDENT, lr=1e-3)
    teacher = train_teacher(dataset, teacher_cfg)
    _note(f"benchmark teacher valid acc {teacher.best_metric:.3f} "
          f"({time.perf_counter() - t0:.0f}s)")
    reports = {}
    for seed in SEEDS:
        for name, weights in VARIANTS.items():
            cfg = dataclasses.replace(BENCH_STUDENT, seed=seed, loss_weights=weights)
            ckpt = train_student(dataset, teacher, cfg)
            reports[name, seed] = robustness_sweep(ckpt, dataset, seeds=SEEDS,
                                                   split="test")
            _note(f"student {name} seed {seed}: partial-missing wF1 "
                  f"{reports[name, seed].mean_partial_wf1():.4f} "
                  f"({time.perf_counter() - t0:.0f}s)")
    return {"reports": reports, "train_seconds": time.perf_counter() - t0}


# 5. distillation beats the corruption-augmentation baseline


def test_distillation_beats_baseline(bench):
    reports = bench["reports"]
    gaps = [
        100.0 * (reports["full", s].mean_partial_wf1()
                 - reports["baseline", s].mean_partial_wf1())
        for s in SEEDS
    ]
    mean_gap = float(np.mean(gaps))
    within_time = bench["train_seconds"] < 1800.0
    ok = mean_gap >= 2.0 and within_time
    _verdict(ok, "distillation beats baseline",
             f"partial-missing wF1 gap per seed "
             f"{[f'{g:+.2f}' for g in gaps]}, mean {mean_gap:+.2f} points "
             f"(need >= +2.00); bench built in {bench['train_seconds']:.0f}s "
             f"(limit 1800s)")
    assert within_time
    assert mean_gap >= 2.0, (
        f"mean gap {mean_gap:+.2f} points < +2.00 (per seed: {gaps})"
    )


# 6. degradation curve: graceful at light corruption, chance at total loss


def test_degradation_curve(bench):
    reports = bench["reports"]
    k = BENCH_DATA.num_classes
    n = BENCH_DATA.samples_per_split[2]
    ci_half = 1.96 * (0.25 * 0.75 / n) ** 0.5
    drops, accs_at_1 = [], []
    for s in SEEDS:
        rep = reports["full", s]
        wf_01 = np.mean([r.wf1 for r in rep.rows_for("intra:0.1")])
        wf_10 = np.mean([r.wf1 for r in rep.rows_for("intra:1")])
        drops.append(100.0 * (wf_01 - wf_10))
        accs_at_1.extend(r.acc for r in rep.rows_for("intra:1"))
    min_drop = min(drops)
    acc_dev = max(abs(a - 1.0 / k) for a in accs_at_1)
    ok = min_drop >= 10.0 and acc_dev <= ci_half
    _verdict(ok, "degradation curve",
             f"wF1 drop from p=0.1 to p=1.0 per seed "
             f"{[f'{d:.1f}' for d in drops]} points (need >= 10.0 each); "
             f"acc at p=1.0 within {acc_dev:.4f} of chance {1.0 / k} "
             f"(95% CI half-width {ci_half:.4f})")
    assert min_drop >= 10.0
    assert acc_dev <= ci_half


# 7. removing any distillation term never helps


def test_ablations_do_not_beat_full(bench):
    reports = bench["reports"]
    details, all_ok = [], True
    for name in ("no_scd", "no_cpd", "no_rcd"):
        wins = sum(
            reports[name, s].mean_partial_wf1()
            <= reports["full", s].mean_partial_wf1()
            for s in SEEDS
        )
        details.append(f"{name} <= full in {wins}/3 seeds")
        all_ok = all_ok and wins >= 2
    _verdict(all_ok, "ablation echo",
             "; ".join(details) + " (need >= 2/3 each)")
    assert all_ok, details


# ---------------------------------------------------------------------------
# 8. pipeline integrity


def test_pipeline_integrity(tiny_dataset, tiny_teacher, tiny_train_cfg, tmp_path):
    t0 = time.perf_counter()
    # teacher parameters are bit-identical before and after distillation
    hash_before = param_hash(tiny_teacher.best_params)
    student = train_student(tiny_dataset, tiny_teacher, tiny_train_cfg)
    hash_after = param_hash(tiny_teacher.best_params)
    teacher_frozen = (hash_before == hash_after == student.teacher_hash)

    # resume from a mid-run checkpoint replays the straight-through run
    cfg3 = dataclasses.replace(tiny_train_cfg, epochs=3)
    straight = train_teacher(tiny_dataset, cfg3)
    partial = train_teacher(tiny_dataset, dataclasses.replace(cfg3, epochs=2))
    mid = tmp_path / "mid.ckpt"
    save_checkpoint(partial, mid)
    resumed = train_teacher(tiny_dataset, cfg3, resume=load_checkpoint(mid))
    resume_ok = (param_hash(resumed.params) == param_hash(straight.params)
                 and resumed.history == straight.history)

    # the command-line pipeline is byte-deterministic for equal seeds
    from corrkd.cli import main

    cfg_path = tmp_path / "micro.yaml"
    cfg_path.write_text(
        "dataset:\n"
        "  num_classes: 3\n"
        "  samples_per_split: [12, 6, 6]\n"
        "  seq_lens: [4, 4, 4]\n"
        "  feature_dims: [6, 5, 4]\n"
        "  latent_dim: 3\n"
        "  seed: 5\n"
    )
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["generate-data", "--config", str(cfg_path),
                     "--out", str(out)]) == 0
        outs.append((out / "dataset.jsonl").read_bytes())
    cli_ok = outs[0] == outs[1]

    elapsed = time.perf_counter() - t0
    ok = teacher_frozen and resume_ok and cli_ok
    _verdict(ok, "pipeline integrity",
             f"teacher hash frozen: {teacher_frozen}; resume == straight-through: "
             f"{resume_ok}; generate-data byte-identical: {cli_ok} ({elapsed:.0f}s)")
    assert teacher_frozen
    assert resume_ok
    assert cli_ok
