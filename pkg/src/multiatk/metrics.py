"""Scalar robustness metrics and leaderboard ranking.

All metrics compare a model's measured robust accuracies (an evaluation
matrix) against the best attainable per-attack accuracies (a baseline table
built by training directly on each attack).  Accuracies and attack strengths
are fractions in [0, 1]; every competitiveness ratio is a percentage.

Everything in this module is a pure function of immutable inputs and uses
plain float arithmetic; no randomness, no global state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .threat import CLEAN, AttackInstance, AttackSet, KnowledgeSet

#: Baseline accuracies below this floor cannot serve as a ratio denominator;
#: the cell is excluded and the distribution renormalized.
DEGENERATE_ACC_STAR = 1e-6

#: Default strength-difference bound for the stability constant ("3%").
DEFAULT_ALPHA = 0.03


class MetricError(ValueError):
    """Base class for metric computation failures."""


class IncompleteEvaluationError(MetricError):
    """An attack set instance has no cell in the evaluation matrix."""

    def __init__(self, instance: AttackInstance, what: str = "evaluation matrix"):
        self.instance = instance
        super().__init__(f"{what} has no cell for {instance.label()}")


class MetricUndefinedError(MetricError):
    """The metric's denominator is degenerate for the whole attack set."""


@dataclass(frozen=True)
class EvaluationMatrix:
    """Robust accuracy of one model under every evaluated attack instance."""

    model_id: str
    cells: Mapping[AttackInstance, float]
    n_samples: Mapping[AttackInstance, int] = field(default_factory=dict)

    def __post_init__(self):
        cells = dict(self.cells)
        for inst, acc in cells.items():
            if not 0.0 <= acc <= 1.0:
                raise MetricError(
                    f"accuracy for {inst.label()} is {acc}, outside [0, 1]"
                )
        if CLEAN not in cells:
            raise MetricError("evaluation matrix must contain the epsilon=0 cell")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "n_samples", dict(self.n_samples))

    @property
    def clean_accuracy(self) -> float:
        return self.cells[CLEAN]

    def accuracy(self, instance: AttackInstance) -> float:
        try:
            return self.cells[instance]
        except KeyError:
            raise IncompleteEvaluationError(instance) from None

    def families(self) -> tuple[str, ...]:
        seen: list[str] = []
        for inst in self.cells:
            if not inst.is_clean and inst.family not in seen:
                seen.append(inst.family)
        return tuple(seen)


@dataclass(frozen=True)
class BaselineCell:
    """Per-seed accuracies of direct training on one attack, and their mean."""

    per_seed: tuple[float, ...]
    acc_star: float

    def __post_init__(self):
        per_seed = tuple(float(a) for a in self.per_seed)
        if not per_seed:
            raise MetricError("baseline cell needs at least one seed accuracy")
        if any(not 0.0 <= a <= 1.0 for a in per_seed):
            raise MetricError("baseline accuracies must lie in [0, 1]")
        mean = sum(per_seed) / len(per_seed)
        if abs(mean - self.acc_star) > 1e-9:
            raise MetricError(
                f"acc_star {self.acc_star} is not the mean of per-seed "
                f"accuracies (expected {mean})"
            )
        object.__setattr__(self, "per_seed", per_seed)
        object.__setattr__(self, "acc_star", float(self.acc_star))

    @classmethod
    def from_seeds(cls, per_seed: Sequence[float]) -> "BaselineCell":
        per_seed = tuple(float(a) for a in per_seed)
        return cls(per_seed, sum(per_seed) / len(per_seed))


@dataclass(frozen=True)
class BaselineTable:
    """Best attainable accuracy per attack instance (mean over seeds).

    The epsilon=0 cell holds the clean accuracy of standard training.
    """

    cells: Mapping[AttackInstance, BaselineCell]
    num_classes: int

    def __post_init__(self):
        cells = dict(self.cells)
        if CLEAN not in cells:
            raise MetricError("baseline table must contain the epsilon=0 cell")
        if self.num_classes < 2:
            raise MetricError("num_classes must be >= 2")
        object.__setattr__(self, "cells", cells)

    def acc_star(self, instance: AttackInstance) -> float:
        try:
            return self.cells[instance].acc_star
        except KeyError:
            raise IncompleteEvaluationError(instance, "baseline table") from None


class CRValue(NamedTuple):
    """A competitiveness percentage plus the degenerate cells it excluded."""

    value: float
    excluded: tuple[AttackInstance, ...]


class SingleCR(NamedTuple):
    avg: float
    worst: float
    excluded: tuple[AttackInstance, ...]


class StabilityResult(NamedTuple):
    value: float
    empty_pair_set: bool


# ---------------------------------------------------------------------------
# Multi-attack error aggregation


def multi_error(matrix: EvaluationMatrix, attack_set: AttackSet, kind: str):
    """Aggregate per-attack errors 1 - acc over an attack set.

    ``exp`` weights errors by the set's distribution, ``max`` takes the worst
    error, ``ind`` returns the error vector in the set's iteration order.
    """
    errors = [1.0 - matrix.accuracy(p) for p in attack_set]
    if kind == "exp":
        return sum(w * e for w, e in zip(attack_set.weights, errors))
    if kind == "max":
        return max(errors)
    if kind == "ind":
        return tuple(errors)
    raise MetricError(f"unknown error kind {kind!r}")


# ---------------------------------------------------------------------------
# Competitiveness ratios


def cr_general(acc_multi: float, acc_star_multi: float) -> float:
    """Aggregated accuracy as a percentage of the best attainable one."""
    if acc_star_multi < DEGENERATE_ACC_STAR:
        raise MetricUndefinedError(
            f"degenerate denominator {acc_star_multi!r}: best attainable "
            "accuracy is (numerically) zero"
        )
    return 100.0 * acc_multi / acc_star_multi


def _split_degenerate(
    attack_set: AttackSet, baselines: BaselineTable
) -> tuple[list[tuple[AttackInstance, float]], tuple[AttackInstance, ...]]:
    """Partition instances into (retained with weight, excluded)."""
    retained: list[tuple[AttackInstance, float]] = []
    excluded: list[AttackInstance] = []
    for inst, w in zip(attack_set.instances, attack_set.weights):
        if baselines.acc_star(inst) < DEGENERATE_ACC_STAR:
            excluded.append(inst)
        else:
            retained.append((inst, w))
    return retained, tuple(excluded)


def cr_ind_avg(
    matrix: EvaluationMatrix, attack_set: AttackSet, baselines: BaselineTable
) -> CRValue:
    """Distribution-weighted mean of per-attack accuracy ratios, as a
    percentage.  Degenerate baseline cells are excluded and the weights
    renormalized over the remainder."""
    retained, excluded = _split_degenerate(attack_set, baselines)
    if not retained:
        raise MetricUndefinedError("every baseline cell is degenerate")
    total_w = sum(w for _, w in retained)
    if total_w <= 0.0:
        # distribution has no mass on non-degenerate cells: uniform fallback
        retained = [(inst, 1.0) for inst, _ in retained]
        total_w = float(len(retained))
    value = 100.0 * sum(
        (w / total_w) * matrix.accuracy(p) / baselines.acc_star(p)
        for p, w in retained
    )
    return CRValue(value, excluded)


def cr_ind_worst(
    matrix: EvaluationMatrix, attack_set: AttackSet, baselines: BaselineTable
) -> CRValue:
    """Worst per-attack accuracy ratio over the set, as a percentage."""
    retained, excluded = _split_degenerate(attack_set, baselines)
    if not retained:
        raise MetricUndefinedError("every baseline cell is degenerate")
    value = 100.0 * min(
        matrix.accuracy(p) / baselines.acc_star(p) for p, _ in retained
    )
    return CRValue(value, excluded)


def cr_exp(
    matrix: EvaluationMatrix, attack_set: AttackSet, baselines: BaselineTable
) -> float:
    """Ratio of expected accuracies: weighted-mean model accuracy over
    weighted-mean best accuracy, as a percentage."""
    num = sum(w * matrix.accuracy(p) for p, w in zip(attack_set.instances, attack_set.weights))
    den = sum(w * baselines.acc_star(p) for p, w in zip(attack_set.instances, attack_set.weights))
    if den < DEGENERATE_ACC_STAR:
        raise MetricUndefinedError("expected baseline accuracy over the set is zero")
    return 100.0 * num / den


def cr_max(
    matrix: EvaluationMatrix, attack_set: AttackSet, baselines: BaselineTable
) -> float:
    """Ratio of worst-case accuracies, as a percentage.  The two minima may
    occur at different instances, so this is never below the worst
    per-attack ratio."""
    num = min(matrix.accuracy(p) for p in attack_set)
    den = min(baselines.acc_star(p) for p in attack_set)
    if den < DEGENERATE_ACC_STAR:
        raise MetricUndefinedError("worst-case baseline accuracy over the set is zero")
    return 100.0 * num / den


def _family_set(
    matrix: EvaluationMatrix, family: str, include_clean: bool = True
) -> AttackSet:
    """Uniform attack set over a family's evaluated grid points."""
    instances = sorted(
        (p for p in matrix.cells if p.family == family and not p.is_clean),
        key=lambda p: p.epsilon,
    )
    if not instances:
        raise MetricError(f"family {family!r} has no evaluated grid point")
    if include_clean:
        instances = [CLEAN] + instances
    return AttackSet(tuple(instances))


def single_cr(
    matrix: EvaluationMatrix, family: str, baselines: BaselineTable
) -> SingleCR:
    """Competitiveness restricted to one family's grid plus the no-attack
    entry, reported as (average, worst) percentages."""
    subset = _family_set(matrix, family, include_clean=True)
    avg = cr_ind_avg(matrix, subset, baselines)
    worst = cr_ind_worst(matrix, subset, baselines)
    return SingleCR(avg.value, worst.value, avg.excluded)


def uar(matrix: EvaluationMatrix, family: str, baselines: BaselineTable) -> float:
    """Sum of the model's accuracies across a family's grid over the sum of
    the best attainable ones, as a percentage."""
    instances = _family_set(matrix, family, include_clean=False).instances
    num = sum(matrix.accuracy(p) for p in instances)
    den = sum(baselines.acc_star(p) for p in instances)
    if den < DEGENERATE_ACC_STAR:
        raise MetricUndefinedError(f"baseline accuracies sum to zero for {family!r}")
    return 100.0 * num / den


def muar(
    matrix: EvaluationMatrix, families: Sequence[str], baselines: BaselineTable
) -> float:
    """Unweighted mean of the per-family sum-ratio scores."""
    if not families:
        raise MetricUndefinedError("no families to average over")
    scores = [uar(matrix, f, baselines) for f in families]
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# Union / average accuracy


def union_accuracy(
    profiles: Mapping[str, Sequence[float]], levels: Mapping[str, float]
) -> float:
    """Fraction of test images robust to every requested attack at once.

    ``profiles`` maps family -> per-image smallest strength at which the
    attack succeeds (``inf`` if it never does, 0 if the clean input is
    already misclassified).  An image survives the union iff its threshold
    exceeds the requested level in every family.
    """
    arrays = []
    for family, level in levels.items():
        if family not in profiles:
            raise IncompleteEvaluationError(
                AttackInstance(family, float(level) if level > 0 else 1.0),
                "minimal-epsilon profiles",
            )
        arrays.append((profiles[family], float(level)))
    if not arrays:
        raise MetricError("union_accuracy needs at least one family level")
    n = len(arrays[0][0])
    if any(len(a) != n for a, _ in arrays):
        raise MetricError("profiles disagree on the number of test images")
    survived = sum(
        1 for i in range(n) if all(a[i] > level for a, level in arrays)
    )
    return survived / n


def average_accuracy(matrix: EvaluationMatrix, attack_set: AttackSet) -> float:
    """Distribution-weighted mean accuracy over the attack set."""
    return sum(
        w * matrix.accuracy(p)
        for p, w in zip(attack_set.instances, attack_set.weights)
    )


# ---------------------------------------------------------------------------
# Attack strength and stability


def attack_strength(instance: AttackInstance, baselines: BaselineTable) -> float:
    """Difficulty proxy: the error of the model trained directly on the
    attack.  For the no-attack entry this is one minus the clean accuracy of
    standard training."""
    return 1.0 - baselines.acc_star(instance)


def stability_constant(
    matrix: EvaluationMatrix,
    attack_set: AttackSet,
    knowledge_set: KnowledgeSet,
    baselines: BaselineTable,
    alpha: float = DEFAULT_ALPHA,
) -> StabilityResult:
    """Largest accuracy-change-to-strength-change ratio between a known
    attack and any attack of similar strength.

    Pairs range over (P1 in the knowledge set, P2 in the attack set) with
    distinct instances and strength gap in (0, alpha].  Equal-strength pairs
    are skipped (the ratio is undefined for them).  Returns 0 with a flag
    when no pair qualifies.
    """
    if alpha <= 0:
        raise MetricError("alpha must be > 0")
    # keep the subset relation K_learner <= K under restricted attack sets
    k_instances = set(attack_set.instances)
    learner = [p for p in knowledge_set if p in k_instances]
    best = 0.0
    found = False
    for p1 in learner:
        s1 = attack_strength(p1, baselines)
        a1 = matrix.accuracy(p1)
        for p2 in attack_set:
            if p1 == p2:
                continue
            gap = abs(s1 - attack_strength(p2, baselines))
            if gap == 0.0 or gap > alpha:
                continue
            found = True
            ratio = abs(a1 - matrix.accuracy(p2)) / gap
            if ratio > best:
                best = ratio
    return StabilityResult(best, not found)


# ---------------------------------------------------------------------------
# Reports and ranking


@dataclass(frozen=True)
class MetricReport:
    """All leaderboard-facing metrics for one model.

    ``None`` marks a metric that is undefined for this model's records (for
    example the union-style scores of an externally ingested model with no
    per-image profiles, or a worst-case ratio whose denominator degenerated).
    """

    model_id: str
    clean_accuracy: float
    cr_ind_avg: Optional[float]
    cr_ind_worst: Optional[float]
    cr_exp: Optional[float]
    cr_max: Optional[float]
    single_cr: Mapping[str, SingleCR]
    muar: Optional[float]
    sc: Optional[float]
    sc_empty_pair_set: bool
    excluded_instances: tuple[AttackInstance, ...]

    def __post_init__(self):
        if (
            self.cr_ind_avg is not None
            and self.cr_ind_worst is not None
            and self.cr_ind_worst > self.cr_ind_avg + 1e-9
        ):
            raise MetricError("worst-case ratio cannot exceed the average ratio")
        object.__setattr__(self, "single_cr", dict(self.single_cr))


def compute_report(
    matrix: EvaluationMatrix,
    attack_set: AttackSet,
    baselines: BaselineTable,
    knowledge_set: KnowledgeSet,
    alpha: float = DEFAULT_ALPHA,
) -> MetricReport:
    """Assemble the full metric report for one model over one attack set."""

    def guarded(fn):
        try:
            return fn()
        except MetricUndefinedError:
            return None

    avg = guarded(lambda: cr_ind_avg(matrix, attack_set, baselines))
    worst = guarded(lambda: cr_ind_worst(matrix, attack_set, baselines))
    families = tuple(
        f for f in matrix.families() if any(p.family == f for p in attack_set)
    )
    singles: dict[str, SingleCR] = {}
    for fam in families:
        sub = attack_set.restricted(
            [CLEAN] + [p for p in attack_set if p.family == fam]
        )
        sub_avg = guarded(lambda: cr_ind_avg(matrix, sub, baselines))
        sub_worst = guarded(lambda: cr_ind_worst(matrix, sub, baselines))
        if sub_avg is not None and sub_worst is not None:
            singles[fam] = SingleCR(sub_avg.value, sub_worst.value, sub_avg.excluded)
    sc = stability_constant(matrix, attack_set, knowledge_set, baselines, alpha)
    return MetricReport(
        model_id=matrix.model_id,
        clean_accuracy=matrix.clean_accuracy,
        cr_ind_avg=avg.value if avg else None,
        cr_ind_worst=worst.value if worst else None,
        cr_exp=guarded(lambda: cr_exp(matrix, attack_set, baselines)),
        cr_max=guarded(lambda: cr_max(matrix, attack_set, baselines)),
        single_cr=singles,
        muar=guarded(lambda: muar(matrix, families, baselines)) if families else None,
        sc=sc.value,
        sc_empty_pair_set=sc.empty_pair_set,
        excluded_instances=avg.excluded if avg else (),
    )


class RankedEntry(NamedTuple):
    rank: int
    model_id: str
    value: float
    clean_accuracy: float


def rank_leaderboard(
    reports: Iterable[MetricReport], metric: str = "cr_ind_avg"
) -> tuple[RankedEntry, ...]:
    """Order reports by a competitiveness metric, best first.  Ties break by
    clean accuracy (descending) then model id."""
    if metric not in ("cr_ind_avg", "cr_ind_worst"):
        raise MetricError(f"cannot rank by {metric!r}")
    reports = list(reports)
    for r in reports:
        if getattr(r, metric) is None:
            raise MetricUndefinedError(
                f"{metric} is undefined for model {r.model_id!r}; cannot rank"
            )
    ordered = sorted(
        reports,
        key=lambda r: (-getattr(r, metric), -r.clean_accuracy, r.model_id),
    )
    return tuple(
        RankedEntry(i + 1, r.model_id, getattr(r, metric), r.clean_accuracy)
        for i, r in enumerate(ordered)
    )


class CRInOut(NamedTuple):
    cr_in: Optional[float]
    cr_out: Optional[float]


def cr_in_out(
    matrix: EvaluationMatrix,
    attack_set: AttackSet,
    knowledge_set: KnowledgeSet,
    baselines: BaselineTable,
) -> CRInOut:
    """Average competitiveness split into attacks the defense trained on and
    attacks it did not.  An empty side is reported as undefined, not 0."""
    if len(knowledge_set) == 0:
        raise MetricError("knowledge set must be non-empty")
    inside = [p for p in attack_set if p in knowledge_set]
    outside = [p for p in attack_set if p not in knowledge_set]

    def side(instances: list[AttackInstance]) -> Optional[float]:
        if not instances:
            return None
        try:
            return cr_ind_avg(matrix, attack_set.restricted(instances), baselines).value
        except MetricUndefinedError:
            return None

    return CRInOut(side(inside), side(outside))
