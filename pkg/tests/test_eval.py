"""Metrics, the robustness sweep grid, and report round trips."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corrkd.corruption import MissingnessSpec
from corrkd.corruption import test_condition_grid as condition_grid
from corrkd.evaluation import (
    AVG_CONDITION,
    PARTIAL_INTER_LABELS,
    MetricsRow,
    accuracy,
    curve_path,
    evaluate_condition,
    format_report_table,
    per_class_f1,
    read_report,
    robustness_sweep,
    weighted_f1,
    write_report,
)


# --- plain metrics --------------------------------------------------------------


def test_accuracy_hand_example():
    assert accuracy(np.array([0, 1, 1, 2]), np.array([0, 1, 2, 2])) == 0.75


def test_accuracy_validates():
    with pytest.raises(ValueError, match="matching 1-D"):
        accuracy(np.array([0, 1]), np.array([0]))
    with pytest.raises(ValueError, match="empty"):
        accuracy(np.array([]), np.array([]))


def test_per_class_f1_hand_example():
    # class 0: tp=1 fp=0 fn=0 -> 1; class 1: tp=1 fp=1 fn=0 -> 2/3
    # class 2: tp=1 fp=0 fn=1 -> 2/3
    preds = np.array([0, 1, 1, 2])
    labels = np.array([0, 1, 2, 2])
    np.testing.assert_allclose(per_class_f1(preds, labels, 3),
                               [1.0, 2 / 3, 2 / 3])


def test_per_class_f1_absent_class_scores_zero():
    f1 = per_class_f1(np.array([0, 0]), np.array([0, 0]), 3)
    np.testing.assert_allclose(f1, [1.0, 0.0, 0.0])


def test_weighted_f1_weights_by_support():
    preds = np.array([0, 1, 1, 2])
    labels = np.array([0, 1, 2, 2])
    # supports 1, 1, 2 -> (1*1 + 2/3*1 + 2/3*2) / 4 = 0.75
    assert weighted_f1(preds, labels, 3) == pytest.approx(0.75)


def test_weighted_f1_matches_reference_implementation():
    def reference_wf1(preds, labels, k):
        total = 0.0
        for c in range(k):
            tp = int(np.sum((preds == c) & (labels == c)))
            fp = int(np.sum((preds == c) & (labels != c)))
            fn = int(np.sum((preds != c) & (labels == c)))
            prec = tp / (tp + fp) if tp + fp else 0.0
            rec = tp / (tp + fn) if tp + fn else 0.0
            f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
            total += f1 * np.sum(labels == c)
        return total / len(labels)

    rng = np.random.default_rng(0)
    for _ in range(20):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(3, 40))
        labels = rng.integers(0, k, size=n)
        preds = rng.integers(0, k, size=n)
        assert weighted_f1(preds, labels, k) == pytest.approx(
            reference_wf1(preds, labels, k), abs=1e-12)


@given(seed=st.integers(0, 200))
def test_metrics_invariant_under_sample_permutation(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    labels = rng.integers(0, 4, size=n)
    preds = rng.integers(0, 4, size=n)
    order = rng.permutation(n)
    assert accuracy(preds, labels) == accuracy(preds[order], labels[order])
    assert weighted_f1(preds, labels, 4) == pytest.approx(
        weighted_f1(preds[order], labels[order], 4))


def test_perfect_predictions_score_one():
    labels = np.array([0, 1, 2, 3, 0, 1])
    assert accuracy(labels, labels) == 1.0
    assert weighted_f1(labels, labels, 4) == 1.0


# --- single-condition evaluation --------------------------------------------------


def test_evaluate_condition_row_fields(tiny_student, tiny_dataset):
    spec = MissingnessSpec(available="la", mode="fixed")
    row = evaluate_condition(tiny_student, tiny_dataset.test, spec, seed=0)
    assert row.condition == "inter:la"
    assert row.p == 0.0
    assert row.available == "la"
    assert row.n == len(tiny_dataset.test)
    assert row.seed == 0
    assert 0.0 <= row.acc <= 1.0
    assert 0.0 <= row.wf1 <= 1.0
    assert len(row.f1_per_class) == 3


def test_evaluate_condition_is_deterministic(tiny_student, tiny_dataset):
    spec = MissingnessSpec(p_l=0.5, p_a=0.5, p_v=0.5, mode="fixed")
    a = evaluate_condition(tiny_student, tiny_dataset.test, spec, seed=3)
    b = evaluate_condition(tiny_student, tiny_dataset.test, spec, seed=3)
    assert (a.acc, a.wf1, a.f1_per_class) == (b.acc, b.wf1, b.f1_per_class)


def test_evaluate_condition_rejects_random_spec(tiny_student, tiny_dataset):
    spec = MissingnessSpec(mode="random_train", p_max=0.5)
    with pytest.raises(ValueError, match="fixed"):
        evaluate_condition(tiny_student, tiny_dataset.test, spec)


def test_evaluate_condition_rejects_empty_samples(tiny_student):
    spec = MissingnessSpec(available="la", mode="fixed")
    with pytest.raises(ValueError, match="empty"):
        evaluate_condition(tiny_student, [], spec)


def test_evaluation_does_not_mutate_dataset(tiny_student, tiny_dataset):
    sample = tiny_dataset.test[0]
    before = (sample.x_l.copy(), sample.x_a.copy(), sample.x_v.copy())
    spec = MissingnessSpec(p_l=1.0, p_a=1.0, p_v=1.0, mode="fixed")
    evaluate_condition(tiny_student, tiny_dataset.test, spec, seed=0)
    np.testing.assert_array_equal(sample.x_l, before[0])
    np.testing.assert_array_equal(sample.x_a, before[1])
    np.testing.assert_array_equal(sample.x_v, before[2])


# --- the sweep --------------------------------------------------------------------


@pytest.fixture(scope="module")
def sweep(tiny_student, tiny_dataset):
    return robustness_sweep(tiny_student, tiny_dataset, seeds=(0, 1), split="test")


def test_sweep_covers_grid_per_seed(sweep):
    assert len(sweep.rows) == 2 * len(condition_grid())
    for seed in (0, 1):
        labels = [r.condition for r in sweep.rows if r.seed == seed]
        assert len(labels) == 17
        assert len(set(labels)) == 17
    assert len(sweep.averages) == 2
    assert set(sweep.monotone_by_seed) == {0, 1}
    assert sweep.num_classes == 3


def test_sweep_average_row_recomputes(sweep):
    for avg in sweep.averages:
        partial = [r for r in sweep.rows
                   if r.seed == avg.seed and r.condition in PARTIAL_INTER_LABELS]
        assert len(partial) == 6
        assert avg.condition == AVG_CONDITION
        assert avg.wf1 == pytest.approx(np.mean([r.wf1 for r in partial]))
        assert avg.acc == pytest.approx(np.mean([r.acc for r in partial]))
    assert sweep.mean_partial_wf1() == pytest.approx(
        np.mean([a.wf1 for a in sweep.averages]))


def test_sweep_monotone_flag_matches_rows(sweep):
    for seed, flag in sweep.monotone_by_seed.items():
        by = {r.condition: r for r in sweep.rows if r.seed == seed}
        assert flag == (by["intra:0.1"].wf1 >= by["intra:1"].wf1)


def test_sweep_threaded_equals_serial(tiny_student, tiny_dataset, sweep):
    threaded = robustness_sweep(tiny_student, tiny_dataset, seeds=(0, 1),
                                split="test", jobs=2)
    assert [(r.condition, r.seed, r.acc, r.wf1) for r in threaded.rows] == \
           [(r.condition, r.seed, r.acc, r.wf1) for r in sweep.rows]


def test_sweep_validates_arguments(tiny_student, tiny_dataset):
    with pytest.raises(ValueError, match="seed"):
        robustness_sweep(tiny_student, tiny_dataset, seeds=())
    with pytest.raises(ValueError, match="jobs"):
        robustness_sweep(tiny_student, tiny_dataset, jobs=0)


def test_rows_for_filters_by_condition(sweep):
    rows = sweep.rows_for("inter:lav")
    assert len(rows) == 2
    assert all(r.condition == "inter:lav" for r in rows)


# --- report files -----------------------------------------------------------------


def test_report_round_trip(tmp_path, sweep):
    path = tmp_path / "report.csv"
    write_report(sweep, path)
    back = read_report(path)
    assert len(back.rows) == len(sweep.rows)
    assert len(back.averages) == len(sweep.averages)
    for a, b in zip(sweep.rows, back.rows):
        assert a.condition == b.condition
        assert a.seed == b.seed
        assert a.n == b.n
        assert b.acc == pytest.approx(a.acc, rel=1e-8)
        assert b.wf1 == pytest.approx(a.wf1, rel=1e-8)
    assert back.monotone_by_seed == sweep.monotone_by_seed


def test_curve_file_contents(tmp_path, sweep):
    path = tmp_path / "report.csv"
    write_report(sweep, path)
    lines = curve_path(path).read_text().strip().splitlines()
    assert lines[0] == "p,mean_wf1"
    assert len(lines) == 11  # ten drop ratios
    ps = [line.split(",")[0] for line in lines[1:]]
    assert ps == ["0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9", "1"]
    p5 = float(lines[5].split(",")[1])
    expected = np.mean([r.wf1 for r in sweep.rows if r.condition == "intra:0.5"])
    assert p5 == pytest.approx(expected, rel=1e-8)


def test_read_report_rejects_other_csv(tmp_path):
    bad = tmp_path / "other.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="not a sweep report"):
        read_report(bad)


def test_format_report_table(sweep):
    text = format_report_table(sweep)
    lines = text.splitlines()
    assert lines[0] == "seeds: 0, 1"
    assert any(line.startswith("inter:lav") for line in lines)
    assert any(line.startswith("Avg. (partial)") for line in lines)
    assert sum("wf1(p=0.1) >= wf1(p=1.0)" in line for line in lines) == 2
    # every grid condition appears exactly once
    for label in ("inter:l", "intra:0.1", "intra:1"):
        assert sum(line.startswith(label + " ") for line in lines) == 1
