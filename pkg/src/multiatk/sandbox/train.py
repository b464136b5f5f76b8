"""Standard and adversarial training for sandbox models.

Defense kinds: ``standard`` (clean minibatches), ``at`` (single-attack
adversarial training), and the multi-attack modes ``avg`` (mean loss over
the set's adversarial examples), ``max`` (per-sample worst loss over the
set), and ``sat`` (per-sample random attack choice).

Training is plain minibatch SGD with the step-decay schedule (initial rate,
then /10 at half the epochs and /100 at three quarters).  The returned model
is the checkpoint with the best robust accuracy on a held-out validation
split, measured against the training threat model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..threat import AttackFamily, AttackInstance, ConfigurationError
from .attacks import AttackBudget, budget_for, run_attack
from .data import SyntheticDataset
from .model import NumericError, SandboxModel, init_model, loss_and_grads, loss_and_pred

DEFENSE_KINDS = ("standard", "at", "avg", "max", "sat")


class TrainingError(RuntimeError):
    def __init__(self, epoch: int, message: str):
        self.epoch = epoch
        super().__init__(f"epoch {epoch}: {message}")


@dataclass(frozen=True)
class DefenseSpec:
    """What the defense trains against."""

    kind: str
    instances: tuple[AttackInstance, ...] = ()

    def __post_init__(self):
        if self.kind not in DEFENSE_KINDS:
            raise ConfigurationError(f"unknown defense kind {self.kind!r}")
        instances = tuple(self.instances)
        if self.kind == "standard" and instances:
            raise ConfigurationError("standard training takes no attack instances")
        if self.kind == "at" and len(instances) != 1:
            raise ConfigurationError("at training takes exactly one attack instance")
        if self.kind in ("avg", "max", "sat") and len(instances) < 1:
            raise ConfigurationError(f"{self.kind} training needs at least one instance")
        if any(p.is_clean for p in instances):
            raise ConfigurationError("training instances must have epsilon > 0")
        object.__setattr__(self, "instances", instances)

    @classmethod
    def standard(cls) -> "DefenseSpec":
        return cls("standard")

    @classmethod
    def at(cls, family: str, epsilon: float) -> "DefenseSpec":
        return cls("at", (AttackInstance(family, epsilon),))

    def training_epsilons(self) -> dict[str, float]:
        """Max train-time epsilon per family (the knowledge-set recipe)."""
        out: dict[str, float] = {}
        for p in self.instances:
            out[p.family] = max(out.get(p.family, 0.0), p.epsilon)
        return out

    def tag(self) -> str:
        # keep ids URL-safe: they end up in query strings and file names
        if self.kind == "standard":
            return "standard"
        parts = "-".join(f"{p.family}{p.epsilon:g}" for p in self.instances)
        return f"{self.kind}_{parts}"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 0.1
    hidden_dim: int = 32
    val_fraction: float = 0.2
    attack_params: dict = field(default_factory=dict)  # per-family overrides

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigurationError("val_fraction must lie in (0, 1)")


def _lr_at(epoch: int, config: TrainConfig) -> float:
    # step decay at 1/2 and 3/4 of the epoch budget
    if epoch >= (3 * config.epochs) // 4:
        return config.learning_rate * 0.01
    if epoch >= config.epochs // 2:
        return config.learning_rate * 0.1
    return config.learning_rate


def _budgets(
    defense: DefenseSpec,
    families: Sequence[AttackFamily],
    shape: tuple[int, int],
) -> dict[AttackInstance, AttackBudget]:
    by_id = {f.id: f for f in families}
    budgets = {}
    for inst in defense.instances:
        if inst.family not in by_id:
            raise ConfigurationError(
                f"defense trains on unregistered family {inst.family!r}"
            )
        budgets[inst] = budget_for(by_id[inst.family], inst.epsilon, shape=shape)
    return budgets


def _adversarial_batch(
    model: SandboxModel,
    xb: np.ndarray,
    yb: np.ndarray,
    defense: DefenseSpec,
    budgets: dict[AttackInstance, AttackBudget],
    rng: np.random.Generator,
) -> np.ndarray:
    """Training inputs for one minibatch under the defense's recipe.

    For ``avg`` the caller averages gradients across the per-instance
    batches, so this returns a stacked (|set|, N, d) array in that case.
    """
    if defense.kind == "standard":
        return xb
    adv = {inst: run_attack(model, xb, yb, budgets[inst]).x_adv for inst in defense.instances}
    if defense.kind == "at":
        return adv[defense.instances[0]]
    if defense.kind == "avg":
        return np.stack([adv[inst] for inst in defense.instances])
    if defense.kind == "max":
        losses = np.stack(
            [loss_and_pred(model, adv[inst], yb)[0] for inst in defense.instances]
        )
        pick = np.argmax(losses, axis=0)
    else:  # sat: uniform random attack per example
        pick = rng.integers(0, len(defense.instances), size=len(yb))
    stacked = np.stack([adv[inst] for inst in defense.instances])
    return stacked[pick, np.arange(len(yb))]


def _robust_accuracy(
    model: SandboxModel,
    x: np.ndarray,
    y: np.ndarray,
    budgets: dict[AttackInstance, AttackBudget],
    kind: str,
) -> float:
    """Validation score against the training threat model: clean accuracy for
    standard training, per-instance robust accuracy aggregated by mean
    (``at``/``avg``/``sat``) or worst case (``max``)."""
    if not budgets:
        _, preds = loss_and_pred(model, x, y)
        return float((preds == y).mean())
    accs = [
        1.0 - float(run_attack(model, x, y, b).success.mean())
        for b in budgets.values()
    ]
    return min(accs) if kind == "max" else sum(accs) / len(accs)


def train(
    dataset: SyntheticDataset,
    defense: DefenseSpec,
    families: Sequence[AttackFamily],
    config: Optional[TrainConfig] = None,
    seed: int = 0,
    model_id: Optional[str] = None,
) -> SandboxModel:
    """Train one sandbox model; deterministic in (dataset, defense, seed)."""
    config = config or TrainConfig()
    rng = np.random.default_rng(seed)
    shape = (dataset.config.height, dataset.config.width)
    budgets = _budgets(defense, families, shape)

    # held-out split for checkpoint selection
    n = len(dataset.train_y)
    perm = rng.permutation(n)
    n_val = max(1, int(round(n * config.val_fraction)))
    val_idx, fit_idx = perm[:n_val], perm[n_val:]
    x_fit, y_fit = dataset.train_x[fit_idx], dataset.train_y[fit_idx]
    x_val, y_val = dataset.train_x[val_idx], dataset.train_y[val_idx]

    model = init_model(
        dataset.input_dim, dataset.num_classes, hidden_dim=config.hidden_dim, rng=rng
    )
    best = model.copy()
    best_score = -1.0
    best_epoch = -1

    for epoch in range(config.epochs):
        lr = _lr_at(epoch, config)
        order = rng.permutation(len(y_fit))
        for start in range(0, len(y_fit), config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x_fit[idx], y_fit[idx]
            try:
                batch = _adversarial_batch(model, xb, yb, defense, budgets, rng)
                if defense.kind == "avg":
                    grad_sets = [loss_and_grads(model, b, yb) for b in batch]
                    if any(not np.isfinite(ls).all() for ls, _, _ in grad_sets):
                        raise TrainingError(epoch, "non-finite training loss")
                    grads = {
                        k: sum(g[k] for _, g, _ in grad_sets) / len(grad_sets)
                        for k in grad_sets[0][1]
                    }
                else:
                    losses, grads, _ = loss_and_grads(model, batch, yb)
                    if not np.isfinite(losses).all():
                        raise TrainingError(epoch, "non-finite training loss")
            except NumericError as exc:
                raise TrainingError(epoch, f"diverged ({exc})") from exc
            for name, p in model.parameters().items():
                p -= lr * grads[name]
        try:
            model.check_finite()
        except NumericError as exc:
            raise TrainingError(epoch, f"diverged ({exc})") from exc
        score = _robust_accuracy(model, x_val, y_val, budgets, defense.kind)
        if score > best_score:
            best = model.copy()
            best_score = score
            best_epoch = epoch

    best.provenance = {
        "model_id": model_id or f"{defense.tag()}_s{seed}",
        "defense_kind": defense.kind,
        "training": [
            {"family": p.family, "epsilon": p.epsilon} for p in defense.instances
        ],
        "seed": int(seed),
        "epochs": int(config.epochs),
        "best_epoch": int(best_epoch),
        "best_val_accuracy": float(best_score),
        "hidden_dim": int(config.hidden_dim),
        "architecture": f"mlp-{config.hidden_dim}" if config.hidden_dim else "linear",
    }
    return best
