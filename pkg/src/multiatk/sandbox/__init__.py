"""Desk-scale experimental sandbox: synthetic images, a small classifier
with exact analytic gradients, six graded attack families, and the training
modes needed to build baselines and defended models."""

from .data import DatasetConfig, SyntheticDataset, make_dataset
from .model import NumericError, SandboxModel, forward, loss_and_grads, predict
from .attacks import (
    AttackBudget,
    budget_for,
    pgd_attack,
    run_attack,
    semantic_attack,
    semantic_transform,
)
from .train import DefenseSpec, TrainConfig, TrainingError, train

__all__ = [
    "AttackBudget",
    "DatasetConfig",
    "DefenseSpec",
    "NumericError",
    "SandboxModel",
    "SyntheticDataset",
    "TrainConfig",
    "TrainingError",
    "budget_for",
    "forward",
    "loss_and_grads",
    "make_dataset",
    "pgd_attack",
    "predict",
    "run_attack",
    "semantic_attack",
    "semantic_transform",
    "train",
]
