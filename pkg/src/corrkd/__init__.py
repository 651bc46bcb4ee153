"""Correlation-decoupled knowledge distillation for multimodal sequence
classification under uncertain missing modalities.

A teacher network is trained on complete three-modality sequences and frozen.
A student with the same architecture is trained on randomly corrupted
sequences under three distillation objectives (sample-level contrastive,
category-prototype, and response-decoupled mutual-information consistency)
plus the task cross-entropy.
"""

from corrkd.datasets import (
    Dataset,
    DatasetConfig,
    DatasetError,
    ModalitySample,
    batch_iter,
    generate_synthetic,
    load_dataset,
    save_dataset,
)
from corrkd.corruption import (
    MissingnessError,
    MissingnessPattern,
    MissingnessSpec,
    apply_mrm,
    sample_pattern,
    test_condition_grid,
)
from corrkd.model import FusionNet, FusionNetConfig
from corrkd.distill import (
    Checkpoint,
    TrainConfig,
    load_checkpoint,
    save_checkpoint,
    train_student,
    train_teacher,
)
from corrkd.evaluation import (
    MetricsRow,
    RobustnessReport,
    evaluate_condition,
    robustness_sweep,
    weighted_f1,
    write_report,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DatasetConfig",
    "DatasetError",
    "ModalitySample",
    "batch_iter",
    "generate_synthetic",
    "load_dataset",
    "save_dataset",
    "MissingnessError",
    "MissingnessPattern",
    "MissingnessSpec",
    "apply_mrm",
    "sample_pattern",
    "test_condition_grid",
    "FusionNet",
    "FusionNetConfig",
    "Checkpoint",
    "TrainConfig",
    "load_checkpoint",
    "save_checkpoint",
    "train_student",
    "train_teacher",
    "MetricsRow",
    "RobustnessReport",
    "evaluate_condition",
    "robustness_sweep",
    "weighted_f1",
    "write_report",
]
