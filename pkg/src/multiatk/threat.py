"""Threat-model vocabulary: attack families, graded attack instances, attack
sets, knowledge sets, and the learner-vs-adversary game.

Everything here is an immutable value type; no attack is ever executed in
this module.  An attack family is a named perturbation type together with an
ordered grid of strengths; an attack instance is one (family, epsilon) point;
the no-attack entry is the canonical instance with epsilon 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

CLEAN_FAMILY = "clean"

#: Family ids with a built-in desk-scale implementation.
BUILTIN_FAMILIES = ("linf", "l2", "l1", "brightness", "contrast", "translate")


class ConfigurationError(ValueError):
    """Raised when a threat-model declaration is internally inconsistent."""


def _known_family_id(family_id: str) -> bool:
    return family_id in BUILTIN_FAMILIES or family_id.startswith("external:")


@dataclass(frozen=True)
class AttackFamily:
    """One perturbation type with its strength grid and optimizer settings.

    ``grid`` is strictly increasing and strictly positive; epsilon 0 is not a
    grid point, it is the shared no-attack entry of any attack set.
    """

    id: str
    grid: tuple[float, ...]
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not _known_family_id(self.id):
            raise ConfigurationError(
                f"unknown attack family {self.id!r}; expected one of "
                f"{BUILTIN_FAMILIES} or 'external:<tag>'"
            )
        grid = tuple(float(e) for e in self.grid)
        if not grid:
            raise ConfigurationError(f"family {self.id!r} has an empty grid")
        if any(not math.isfinite(e) or e <= 0 for e in grid):
            raise ConfigurationError(
                f"family {self.id!r}: grid strengths must be finite and > 0"
            )
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError(
                f"family {self.id!r}: grid must be strictly increasing"
            )
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "params", dict(self.params))

    def instances(self) -> tuple["AttackInstance", ...]:
        return tuple(AttackInstance(self.id, e) for e in self.grid)

    def __hash__(self):
        return hash((self.id, self.grid))


@dataclass(frozen=True)
class AttackInstance:
    """One perturbation function: a family evaluated at one strength.

    Epsilon 0 denotes the no-attack entry; all epsilon-0 instances are
    canonicalized to the shared ``clean`` family so that a set can hold at
    most one of them.
    """

    family: str
    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps < 0:
            raise ConfigurationError(f"epsilon must be finite and >= 0, got {eps}")
        object.__setattr__(self, "epsilon", eps)
        if eps == 0.0:
            object.__setattr__(self, "family", CLEAN_FAMILY)

    @property
    def is_clean(self) -> bool:
        return self.epsilon == 0.0

    def label(self) -> str:
        return CLEAN_FAMILY if self.is_clean else f"{self.family}@{self.epsilon:g}"


#: The shared no-attack entry.
CLEAN = AttackInstance(CLEAN_FAMILY, 0.0)


@dataclass(frozen=True)
class AttackSet:
    """An ordered set of attack instances with a probability distribution.

    The distribution defaults to uniform over all instances, including the
    no-attack entry when present.  Iteration order is construction order and
    is the order of vector-valued errors.
    """

    instances: tuple[AttackInstance, ...]
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        instances = tuple(self.instances)
        if len(set(instances)) != len(instances):
            raise ConfigurationError("attack set contains duplicate instances")
        if sum(1 for p in instances if p.is_clean) > 1:
            raise ConfigurationError("attack set may contain at most one epsilon=0 entry")
        if not instances:
            raise ConfigurationError("attack set must be non-empty")
        weights = tuple(float(w) for w in self.weights)
        if not weights:
            weights = (1.0 / len(instances),) * len(instances)
        if len(weights) != len(instances):
            raise ConfigurationError("weights length must match instances")
        if any(w < 0 for w in weights):
            raise ConfigurationError("weights must be nonnegative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ConfigurationError("weights must sum to 1")
        object.__setattr__(self, "instances", instances)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __contains__(self, instance: AttackInstance) -> bool:
        return instance in set(self.instances)

    def weight_of(self, instance: AttackInstance) -> float:
        return self.weights[self.instances.index(instance)]

    def restricted(self, keep: Iterable[AttackInstance]) -> "AttackSet":
        """Sub-set on ``keep`` with weights renormalized; order preserved.
        Keeping everything is the identity (no weight drift)."""
        keep = set(keep)
        pairs = [(p, w) for p, w in zip(self.instances, self.weights) if p in keep]
        if not pairs:
            raise ConfigurationError("restriction leaves an empty attack set")
        if len(pairs) == len(self.instances):
            return self
        total = sum(w for _, w in pairs)
        if total <= 0:
            # all retained weights zero: fall back to uniform over retained
            return AttackSet(tuple(p for p, _ in pairs))
        return AttackSet(
            tuple(p for p, _ in pairs), tuple(w / total for _, w in pairs)
        )


def full_attack_set(
    families: Sequence[AttackFamily], include_clean: bool = True
) -> AttackSet:
    """Uniform attack set over every grid point of ``families`` (plus the
    no-attack entry by default)."""
    instances: list[AttackInstance] = [CLEAN] if include_clean else []
    for fam in families:
        instances.extend(fam.instances())
    return AttackSet(tuple(instances))


@dataclass(frozen=True)
class KnowledgeSet:
    """The perturbation functions the defender was allowed to exploit during
    training.  Always contains the no-attack entry."""

    instances: frozenset[AttackInstance]

    def __post_init__(self):
        instances = frozenset(self.instances) | {CLEAN}
        object.__setattr__(self, "instances", instances)

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(sorted(self.instances, key=lambda p: (p.family, p.epsilon)))

    def __contains__(self, instance: AttackInstance) -> bool:
        return instance in self.instances


def build_knowledge_set(
    training_config: Mapping[str, float], families: Sequence[AttackFamily]
) -> KnowledgeSet:
    """Knowledge set implied by a defense's training threat model.

    ``training_config`` maps each train-time family id to the largest epsilon
    the defense trained with.  The result contains the no-attack entry plus,
    for each train-time family, every grid point at or below that epsilon
    (the train epsilon is snapped down onto the grid).  A standard-trained
    defense (empty config) yields just the no-attack entry.
    """
    by_id = {f.id: f for f in families}
    instances: set[AttackInstance] = {CLEAN}
    for family_id, train_eps in training_config.items():
        if family_id not in by_id:
            raise ConfigurationError(
                f"training threat model names unknown family {family_id!r}; "
                f"registered: {sorted(by_id)}"
            )
        train_eps = float(train_eps)
        if train_eps < 0:
            raise ConfigurationError(
                f"train-time epsilon must be >= 0, got {train_eps} for {family_id!r}"
            )
        grid = by_id[family_id].grid
        prefix = [e for e in grid if e <= train_eps]
        if train_eps > 0 and not prefix:
            warnings.warn(
                f"train epsilon {train_eps:g} for {family_id!r} is below the "
                f"smallest grid point {grid[0]:g}; knowledge set keeps only the "
                "no-attack entry for this family",
                stacklevel=2,
            )
        instances.update(AttackInstance(family_id, e) for e in prefix)
    return KnowledgeSet(frozenset(instances))


@dataclass(frozen=True)
class GameSpec:
    """Parameters of one round of the learner-vs-adversary game.

    ``threshold`` is the ratio the learner must stay under; a vector
    threshold is only meaningful for the per-attack (``ind``) error kind and
    must have one entry per instance of the attack set.
    """

    threshold: float | tuple[float, ...]
    attack_set: AttackSet
    knowledge_set: KnowledgeSet
    error_kind: str = "exp"

    def __post_init__(self):
        if self.error_kind not in ("exp", "max", "ind"):
            raise ConfigurationError(f"unknown error kind {self.error_kind!r}")
        if isinstance(self.threshold, (tuple, list)):
            if self.error_kind != "ind":
                raise ConfigurationError("vector threshold requires error_kind='ind'")
            if len(self.threshold) != len(self.attack_set):
                raise ConfigurationError(
                    "vector threshold length must equal attack set size"
                )
            object.__setattr__(self, "threshold", tuple(float(g) for g in self.threshold))
        else:
            object.__setattr__(self, "threshold", float(self.threshold))
        if len(self.knowledge_set) > len(self.attack_set):
            raise ConfigurationError("knowledge set larger than attack set")


@dataclass(frozen=True)
class GameOutcome:
    win: bool
    ratios: tuple[float, ...]
    unbounded: bool = False


def _single_ratio(err_h: float, err_opt: float, threshold: float) -> tuple[bool, float, bool]:
    """(component wins, ratio, unbounded flag) for one error pair."""
    if err_opt == 0.0:
        if err_h == 0.0:
            return True, 1.0, False
        # Unbounded ratio: only an infinite threshold tolerates it.
        return math.isinf(threshold), math.inf, True
    ratio = err_h / err_opt
    return ratio <= threshold, ratio, False


def game_outcome(
    spec: GameSpec,
    err_h: float | Sequence[float],
    err_opt: float | Sequence[float],
) -> GameOutcome:
    """Decide the game: the learner wins if its multi-attack error is within
    the threshold factor of the best achievable error (componentwise for the
    ``ind`` kind)."""
    if spec.error_kind == "ind":
        err_h = tuple(float(e) for e in err_h)  # type: ignore[arg-type]
        err_opt = tuple(float(e) for e in err_opt)  # type: ignore[arg-type]
        n = len(spec.attack_set)
        if len(err_h) != n or len(err_opt) != n:
            raise ConfigurationError("ind errors must have one entry per instance")
        thresholds = (
            spec.threshold
            if isinstance(spec.threshold, tuple)
            else (spec.threshold,) * n
        )
        results = [
            _single_ratio(eh, eo, g) for eh, eo, g in zip(err_h, err_opt, thresholds)
        ]
        return GameOutcome(
            win=all(ok for ok, _, _ in results),
            ratios=tuple(r for _, r, _ in results),
            unbounded=any(u for _, _, u in results),
        )
    ok, ratio, unbounded = _single_ratio(float(err_h), float(err_opt), spec.threshold)  # type: ignore[arg-type]
    return GameOutcome(win=ok, ratios=(ratio,), unbounded=unbounded)
