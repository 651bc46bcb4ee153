"""Shared fixtures: one tiny dataset and one tiny teacher/student pair.

Session-scoped because training even the smallest nets dominates test
runtime; individual tests must treat these as read-only.
"""

import pytest
from hypothesis import HealthCheck, settings

from corrkd.datasets import DatasetConfig, generate_synthetic
from corrkd.distill import TrainConfig, train_student, train_teacher
from corrkd.model import FusionNetConfig

settings.register_profile(
    "desk", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("desk")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines; fd capture hides in-test prints."""
    import helpers

    if helpers.ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in helpers.ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)

TINY_DIMS = (6, 5, 4)


@pytest.fixture(scope="session")
def tiny_ds_config():
    return DatasetConfig(
        num_classes=3,
        samples_per_split=(96, 30, 30),
        seq_lens=(8, 8, 8),
        feature_dims=TINY_DIMS,
        latent_dim=4,
        noise_std=0.5,
        seed=1,
    )


@pytest.fixture(scope="session")
def tiny_dataset(tiny_ds_config):
    return generate_synthetic(tiny_ds_config)


@pytest.fixture(scope="session")
def tiny_net_cfg():
    return FusionNetConfig(
        d=16, num_heads=2, num_layers=1, ffn_dim=32, dropout=0.1,
        num_classes=3, feature_dims=TINY_DIMS,
    )


@pytest.fixture(scope="session")
def tiny_train_cfg(tiny_net_cfg):
    return TrainConfig(net=tiny_net_cfg, lr=2e-3, batch_size=32, epochs=2, seed=0)


@pytest.fixture(scope="session")
def tiny_teacher(tiny_dataset, tiny_train_cfg):
    return train_teacher(tiny_dataset, tiny_train_cfg)


@pytest.fixture(scope="session")
def tiny_student(tiny_dataset, tiny_teacher, tiny_train_cfg):
    return train_student(tiny_dataset, tiny_teacher, tiny_train_cfg)
