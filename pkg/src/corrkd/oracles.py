"""Hand-computed reference values for every loss, runnable as a self-check.

Each check builds a tiny input whose loss can be worked out on paper and
compares the implementation against that closed-form number.  The CLI
exposes these through `corrkd check-losses`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch

from corrkd.losses import (
    StatNetConfig,
    build_statnet,
    category_prototypes,
    cpd_loss,
    decouple_response,
    jsd_mi_estimate,
    random_derangement,
    rcd_loss,
    reconstruct_response,
    scd_loss,
    similarity_row,
    task_loss,
    total_loss,
)


@dataclass
class OracleResult:
    name: str
    passed: bool
    expected: str
    actual: str
    tol: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: expected {self.expected}, got {self.actual} (tol {self.tol:g})"


def _result(name: str, actual: float, expected: float, tol: float) -> OracleResult:
    ok = math.isfinite(actual) and abs(actual - expected) <= tol
    return OracleResult(name, ok, f"{expected:.9g}", f"{actual:.9g}", tol)


def _t(data) -> torch.Tensor:
    return torch.tensor(data, dtype=torch.float64)


def _const_statnet(input_dim: int, value: float):
    """A critic that outputs `value` for every input."""
    net = build_statnet(StatNetConfig(input_dim=input_dim), seed=0)
    with torch.no_grad():
        for p in net.parameters():
            p.zero_()
        net.net[-1].bias.fill_(value)
    net.requires_grad_(False)
    return net


def check_scd_two_sample() -> OracleResult:
    # Aligned pairs coincide (positive term 0); both cross distances are 1,
    # inside the 1.2 margin, so the loss is 2 * (1.2 - 1)^2 = 0.08.
    h = _t([[0.0], [1.0]])
    val = float(scd_loss(h, h, eta=1.2))
    return _result("scd two-sample margin case", val, 0.08, 1e-9)


def check_scd_separated_zero() -> OracleResult:
    # Aligned pairs coincide and cross pairs are farther than the margin.
    h = _t([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    val = float(scd_loss(h, h, eta=1.2))
    return _result("scd zero at separation", val, 0.0, 0.0)


def check_prototype_mean() -> OracleResult:
    h = _t([[1.0, 0.0], [0.0, 1.0]])
    table = category_prototypes(h, torch.tensor([0, 0]))
    got = table.prototypes[0]
    val = float(torch.abs(got - _t([0.5, 0.5])).max())
    return _result("prototype is the class mean", val, 0.0, 1e-12)


def check_similarity_cosine() -> OracleResult:
    proto = category_prototypes(_t([[1.0, 0.0]]), torch.tensor([0]))
    row = similarity_row(_t([1.0, 1.0]), proto)
    return _result("similarity cosine 45 degrees", float(row[0]),
                    math.sqrt(0.5), 1e-4)


def check_similarity_extremes() -> OracleResult:
    proto = category_prototypes(_t([[2.0, 1.0]]), torch.tensor([0]))
    plus = float(similarity_row(_t([4.0, 2.0]), proto)[0])
    minus = float(similarity_row(_t([-2.0, -1.0]), proto)[0])
    val = max(abs(plus - 1.0), abs(minus + 1.0))
    return _result("similarity +/-1 at parallel vectors", val, 0.0, 1e-12)


def check_cpd_identical() -> OracleResult:
    h = _t([[1.0, 2.0], [3.0, -1.0], [0.5, 0.5], [-2.0, 1.0]])
    y = torch.tensor([0, 1, 0, 1])
    val = float(cpd_loss(h, h, y))
    return _result("cpd zero for identical sides", val, 0.0, 1e-12)


def check_cpd_uniform_offset() -> OracleResult:
    # Teacher vectors sit on their prototype (similarity 1 everywhere).
    # Student vectors are at a common angle to theirs with cosine 0.9, so
    # the similarity gap is 0.1 at every entry.
    y = torch.tensor([0, 0])
    h_t = _t([[1.0, 0.0], [1.0, 0.0]])
    a = math.acos(0.9)
    h_s = _t([[math.cos(a), math.sin(a)], [math.cos(a), -math.sin(a)]])
    val = float(cpd_loss(h_s, h_t, y))
    return _result("cpd uniform similarity offset", val, 0.1, 1e-9)


def check_decouple_round_trip() -> OracleResult:
    probs = _t([0.5, 0.3, 0.2])
    d = decouple_response(probs, 0)
    back = reconstruct_response(d, 0)
    err = max(
        abs(float(d.tcr) - 0.5),
        float(torch.abs(d.ntcr - _t([0.3, 0.2])).max()),
        float(torch.abs(back - probs).max()),
    )
    return _result("response decouple round trip", err, 0.0, 1e-12)


def check_jsd_zero_critic() -> OracleResult:
    q = _t([[0.1], [0.2], [0.3], [0.4]])
    u = _t([[0.4], [0.3], [0.2], [0.1]])
    net = _const_statnet(2, 0.0)
    perm = random_derangement(4, np.random.default_rng(0))
    val = float(jsd_mi_estimate(q, u, net, perm))
    return _result("jsd bound at zero critic", val, -2.0 * math.log(2.0), 1e-12)


def check_jsd_unit_critic() -> OracleResult:
    q = _t([[0.1], [0.2], [0.3], [0.4]])
    u = _t([[0.4], [0.3], [0.2], [0.1]])
    net = _const_statnet(2, 1.0)
    perm = random_derangement(4, np.random.default_rng(0))
    expected = -math.log(1.0 + math.exp(-1.0)) - math.log(1.0 + math.exp(1.0))
    val = float(jsd_mi_estimate(q, u, net, perm))
    return _result("jsd bound at unit critic", val, expected, 1e-5)


def check_rcd_zero_critics() -> OracleResult:
    k = 3
    probs = torch.full((4, k), 1.0 / k, dtype=torch.float64)
    y = torch.tensor([0, 1, 2, 0])
    net_t = _const_statnet(2, 0.0)
    net_nt = _const_statnet(2 * (k - 1), 0.0)
    val = float(rcd_loss(probs, probs, y, net_t, net_nt, np.random.default_rng(0)))
    return _result("rcd at zero critics", val, 4.0 * math.log(2.0), 1e-12)


def check_rcd_nonnegative() -> OracleResult:
    rng = np.random.default_rng(7)
    k = 4
    logits = torch.tensor(rng.normal(size=(6, k)))
    probs_t = torch.softmax(logits, dim=-1)
    probs_s = torch.softmax(torch.tensor(rng.normal(size=(6, k))), dim=-1)
    y = torch.tensor(rng.integers(0, k, size=6))
    net_t = build_statnet(StatNetConfig(input_dim=2), seed=3)
    net_nt = build_statnet(StatNetConfig(input_dim=2 * (k - 1)), seed=4)
    val = float(rcd_loss(probs_t, probs_s, y, net_t, net_nt, rng).detach())
    # loss >= 0 always; report the negative part as the error.
    return _result("rcd nonnegative", min(val, 0.0), 0.0, 0.0)


def check_task_uniform() -> OracleResult:
    logits = torch.zeros(5, 4, dtype=torch.float64)
    y = torch.tensor([0, 1, 2, 3, 0])
    val = float(task_loss(logits, y))
    return _result("task loss at uniform logits", val, math.log(4.0), 1e-12)


def check_task_matches_direct_form() -> OracleResult:
    rng = np.random.default_rng(11)
    logits = torch.tensor(rng.normal(size=(8, 5)))
    y = torch.tensor(rng.integers(0, 5, size=8))
    probs = torch.softmax(logits, dim=-1)
    direct = float(-torch.log(probs[torch.arange(8), y]).mean())
    val = float(task_loss(logits, y))
    return _result("task loss matches -log p[y]", val, direct, 1e-6)


def check_total_sum() -> OracleResult:
    parts = [_t(v) for v in (1.0, 2.0, 3.0, 4.0)]
    total, breakdown = total_loss(*parts)
    err = max(abs(float(total) - 10.0), abs(breakdown.total - 10.0),
              abs(breakdown.task + breakdown.scd + breakdown.cpd + breakdown.rcd - 10.0))
    return _result("total is the weighted sum", err, 0.0, 1e-12)


def check_total_task_only_weights() -> OracleResult:
    parts = [_t(v) for v in (1.5, 2.0, 3.0, 4.0)]
    total, breakdown = total_loss(*parts, weights=(1.0, 0.0, 0.0, 0.0))
    err = max(abs(float(total) - 1.5), abs(breakdown.scd), abs(breakdown.cpd),
              abs(breakdown.rcd))
    return _result("total with task-only weights", err, 0.0, 1e-12)


ALL_CHECKS = (
    check_scd_two_sample,
    check_scd_separated_zero,
    check_prototype_mean,
    check_similarity_cosine,
    check_similarity_extremes,
    check_cpd_identical,
    check_cpd_uniform_offset,
    check_decouple_round_trip,
    check_jsd_zero_critic,
    check_jsd_unit_critic,
    check_rcd_zero_critics,
    check_rcd_nonnegative,
    check_task_uniform,
    check_task_matches_direct_form,
    check_total_sum,
    check_total_task_only_weights,
)


def run_loss_oracles() -> list[OracleResult]:
    return [check() for check in ALL_CHECKS]
