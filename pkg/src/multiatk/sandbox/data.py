"""Synthetic image classification data.

Images are small grayscale grids in [0, 1] built from per-class geometric
templates (square, cross, diagonals) with random contrast jitter and bounded
pixel noise.  Generation is a pure function of the seed: the same seed yields
bit-identical arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..threat import ConfigurationError


@dataclass(frozen=True)
class DatasetConfig:
    height: int = 8
    width: int = 8
    num_classes: int = 3
    n_train: int = 600
    n_test: int = 240
    noise: float = 0.22
    seed: int = 7

    def __post_init__(self):
        if min(self.height, self.width, self.num_classes, self.n_train, self.n_test) <= 0:
            raise ConfigurationError("dataset dimensions must be positive")
        if self.num_classes > 3:
            raise ConfigurationError("at most 3 template classes are defined")
        if not 0.0 <= self.noise <= 0.5:
            raise ConfigurationError("noise amplitude must lie in [0, 0.5]")


@dataclass(frozen=True)
class SyntheticDataset:
    """Flattened images (N, H*W) in [0, 1] with integer labels."""

    config: DatasetConfig
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.config.height * self.config.width

    @property
    def num_classes(self) -> int:
        return self.config.num_classes


def class_templates(height: int, width: int, num_classes: int) -> np.ndarray:
    """Binary shape masks, one per class: filled square, plus sign, X."""
    templates = np.zeros((num_classes, height, width))
    # class 0: centered filled square covering ~half the image
    h0, h1 = height // 4, height - height // 4
    w0, w1 = width // 4, width - width // 4
    templates[0, h0:h1, w0:w1] = 1.0
    if num_classes > 1:
        # class 1: plus sign through the middle rows/columns
        rows = slice(height // 2 - 1, height // 2 + 1)
        cols = slice(width // 2 - 1, width // 2 + 1)
        templates[1, rows, :] = 1.0
        templates[1, :, cols] = 1.0
    if num_classes > 2:
        # class 2: both diagonals
        for i in range(height):
            j = round(i * (width - 1) / (height - 1))
            templates[2, i, j] = 1.0
            templates[2, i, width - 1 - j] = 1.0
    return templates


def _balanced_labels(n: int, num_classes: int, rng: np.random.Generator) -> np.ndarray:
    """Class labels with counts balanced within +/-1, in shuffled order."""
    labels = np.arange(n) % num_classes
    rng.shuffle(labels)
    return labels


def _render(
    labels: np.ndarray,
    templates: np.ndarray,
    noise: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Template rendering.  Per-image brightness/contrast jitter counts as
    part of the noise channel: at zero noise every image is exactly its
    class template at the nominal intensity."""
    n = len(labels)
    flat = templates.reshape(templates.shape[0], -1)
    if noise == 0.0:
        return np.clip(0.15 + 0.6 * flat[labels], 0.0, 1.0)
    base = rng.uniform(0.05, 0.25, size=(n, 1))
    gain = rng.uniform(0.45, 0.75, size=(n, 1))
    images = base + gain * flat[labels]
    images = images + rng.uniform(-noise, noise, size=images.shape)
    return np.clip(images, 0.0, 1.0)


def make_dataset(config: DatasetConfig | None = None, seed: int | None = None) -> SyntheticDataset:
    """Generate the train/test splits deterministically from the seed."""
    config = config or DatasetConfig()
    if seed is not None:
        config = DatasetConfig(**{**config.__dict__, "seed": seed})
    rng = np.random.default_rng(config.seed)
    templates = class_templates(config.height, config.width, config.num_classes)
    train_y = _balanced_labels(config.n_train, config.num_classes, rng)
    train_x = _render(train_y, templates, config.noise, rng)
    test_y = _balanced_labels(config.n_test, config.num_classes, rng)
    test_x = _render(test_y, templates, config.noise, rng)
    return SyntheticDataset(
        config=config,
        train_x=train_x,
        train_y=train_y.astype(np.int64),
        test_x=test_x,
        test_y=test_y.astype(np.int64),
    )
