"""A small classifier with exact analytic gradients.

Architecture: input -> (optional) tanh hidden layer -> logits, trained with
softmax cross-entropy.  With ``hidden_dim=0`` the model is linear, which the
attack tests exploit for closed-form optima.  Forward and backward are plain
numpy; the backward pass returns both parameter gradients and the gradient
of the per-sample loss with respect to the input pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class NumericError(ArithmeticError):
    """A non-finite value appeared during the forward pass."""

    def __init__(self, layer: int):
        self.layer = layer
        super().__init__(f"non-finite activations in layer {layer}")


@dataclass
class SandboxModel:
    """Weights plus training provenance.  Immutable by convention after
    training; attacks never mutate it."""

    w1: np.ndarray  # (hidden, d) or (classes, d) when linear
    b1: np.ndarray
    w2: np.ndarray | None = None  # (classes, hidden); None for linear models
    b2: np.ndarray | None = None
    provenance: Mapping[str, object] = field(default_factory=dict)

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def num_classes(self) -> int:
        return self.b2.shape[0] if self.w2 is not None else self.b1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0] if self.w2 is not None else 0

    @property
    def model_id(self) -> str:
        return str(self.provenance.get("model_id", "model"))

    def parameters(self) -> dict[str, np.ndarray]:
        params = {"w1": self.w1, "b1": self.b1}
        if self.w2 is not None:
            params["w2"] = self.w2
            params["b2"] = self.b2
        return params

    def copy(self) -> "SandboxModel":
        return SandboxModel(
            w1=self.w1.copy(),
            b1=self.b1.copy(),
            w2=None if self.w2 is None else self.w2.copy(),
            b2=None if self.b2 is None else self.b2.copy(),
            provenance=dict(self.provenance),
        )

    def check_finite(self):
        for name, p in self.parameters().items():
            if not np.all(np.isfinite(p)):
                raise NumericError(layer=1 if name in ("w1", "b1") else 2)


def init_model(
    input_dim: int,
    num_classes: int,
    hidden_dim: int = 32,
    rng: np.random.Generator | None = None,
) -> SandboxModel:
    """Scaled-Gaussian initialization; deterministic given the generator."""
    rng = rng or np.random.default_rng(0)
    if hidden_dim <= 0:
        w1 = rng.normal(0.0, 1.0 / np.sqrt(input_dim), size=(num_classes, input_dim))
        return SandboxModel(w1=w1, b1=np.zeros(num_classes))
    w1 = rng.normal(0.0, 1.0 / np.sqrt(input_dim), size=(hidden_dim, input_dim))
    w2 = rng.normal(0.0, 1.0 / np.sqrt(hidden_dim), size=(num_classes, hidden_dim))
    return SandboxModel(w1=w1, b1=np.zeros(hidden_dim), w2=w2, b2=np.zeros(num_classes))


def _as_batch(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x[None, :] if x.ndim == 1 else x


def forward(model: SandboxModel, x: np.ndarray) -> np.ndarray:
    """Logits of shape (N, classes); accepts a single flat image or a batch."""
    x = _as_batch(x)
    z1 = x @ model.w1.T + model.b1
    if not np.all(np.isfinite(z1)):
        raise NumericError(layer=1)
    if model.w2 is None:
        return z1
    a1 = np.tanh(z1)
    z2 = a1 @ model.w2.T + model.b2
    if not np.all(np.isfinite(z2)):
        raise NumericError(layer=2)
    return z2


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def predict(model: SandboxModel, x: np.ndarray) -> np.ndarray:
    """Predicted class per sample (lowest index wins ties)."""
    return np.argmax(forward(model, x), axis=1)


def loss_value(model: SandboxModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-sample cross-entropy loss, shape (N,)."""
    x = _as_batch(x)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    logits = forward(model, x)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    return log_z - shifted[np.arange(len(y)), y]


def loss_and_grads(
    model: SandboxModel, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, dict[str, np.ndarray], np.ndarray]:
    """Per-sample losses, batch-mean parameter gradients, and per-sample
    input-pixel gradients.

    The parameter gradients are of the mean loss over the batch (ready for a
    minibatch SGD step); the input gradients are of each sample's own loss.
    """
    x = _as_batch(x)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    n = x.shape[0]
    z1 = x @ model.w1.T + model.b1
    if not np.all(np.isfinite(z1)):
        raise NumericError(layer=1)
    if model.w2 is None:
        logits = z1
        a1 = None
    else:
        a1 = np.tanh(z1)
        logits = a1 @ model.w2.T + model.b2
        if not np.all(np.isfinite(logits)):
            raise NumericError(layer=2)
    probs = _softmax(logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    losses = log_z - shifted[np.arange(n), y]

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0  # d loss_i / d logits_i

    grads: dict[str, np.ndarray] = {}
    if model.w2 is None:
        grads["w1"] = dlogits.T @ x / n
        grads["b1"] = dlogits.mean(axis=0)
        dx = dlogits @ model.w1
    else:
        grads["w2"] = dlogits.T @ a1 / n
        grads["b2"] = dlogits.mean(axis=0)
        da1 = dlogits @ model.w2
        dz1 = da1 * (1.0 - a1 * a1)
        grads["w1"] = dz1.T @ x / n
        grads["b1"] = dz1.mean(axis=0)
        dx = dz1 @ model.w1
    return losses, grads, dx


def input_gradient(model: SandboxModel, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of each sample's loss with respect to its pixels, (N, d)."""
    _, _, dx = loss_and_grads(model, x, y)
    return dx


def loss_input_grad_pred(
    model: SandboxModel, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Attack-loop workhorse: per-sample losses, input gradients, and
    predictions in a single pass, skipping parameter gradients."""
    x = _as_batch(x)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    n = x.shape[0]
    z1 = x @ model.w1.T + model.b1
    if not np.all(np.isfinite(z1)):
        raise NumericError(layer=1)
    if model.w2 is None:
        logits = z1
        a1 = None
    else:
        a1 = np.tanh(z1)
        logits = a1 @ model.w2.T + model.b2
        if not np.all(np.isfinite(logits)):
            raise NumericError(layer=2)
    probs = _softmax(logits)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    losses = log_z - shifted[np.arange(n), y]
    dlogits = probs
    dlogits[np.arange(n), y] -= 1.0
    if model.w2 is None:
        dx = dlogits @ model.w1
    else:
        dz1 = (dlogits @ model.w2) * (1.0 - a1 * a1)
        dx = dz1 @ model.w1
    return losses, dx, np.argmax(logits, axis=1)


def loss_and_pred(
    model: SandboxModel, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample losses and predictions without any gradient work."""
    x = _as_batch(x)
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    logits = forward(model, x)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    losses = log_z - shifted[np.arange(len(y)), y]
    return losses, np.argmax(logits, axis=1)
