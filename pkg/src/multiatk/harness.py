"""Robust-accuracy evaluation: per-image minimal-epsilon search over each
family's strength grid, curve assembly, and baseline-table construction.

Monotone evaluation
-------------------
Raw gradient attacks are not guaranteed to succeed at a large epsilon just
because they succeed at a smaller one.  The harness therefore evaluates a
family's grid as a warm-started cascade: the attack at grid point j starts
from the strongest perturbation found at grid point j-1 (feasible, since the
balls are nested), and an image counts as broken at grid point j if any
phase up to j found a misclassifying iterate.  Each phase is a deterministic
pure function of (model, image, family, grid index), so per-image success is
monotone in epsilon by construction and the binary search over the grid is
guaranteed to agree with an exhaustive scan.

Binary search still bounds the number of attack probes per (image, family)
by ceil(log2(grid size)) + 1; phase states are cached per (image, epsilon)
so repeated probes never redo gradient work.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .metrics import BaselineCell, BaselineTable, EvaluationMatrix
from .sandbox.attacks import AttackResult, budget_for, run_attack
from .sandbox.data import SyntheticDataset
from .sandbox.model import SandboxModel, predict
from .sandbox.train import DefenseSpec, TrainConfig, TrainingError, train
from .threat import CLEAN, AttackFamily, AttackInstance

NEVER = math.inf  # sentinel: the attack never succeeds on the grid


class EvaluationAborted(RuntimeError):
    """Raised when more than the tolerated fraction of images fail."""

    def __init__(self, failures: list[tuple[int, str]]):
        self.failures = failures
        super().__init__(
            f"evaluation aborted: {len(failures)} image(s) failed; first: "
            f"image {failures[0][0]}: {failures[0][1]}"
        )


@dataclass(frozen=True)
class MinimalEpsilonProfile:
    """Per family, the smallest grid strength that breaks each test image.

    Values are grid strengths, 0 for images the clean model already gets
    wrong, or ``inf`` when no grid strength succeeds.  The profile compresses
    every robust-accuracy curve of the model.
    """

    model_id: str
    families: Mapping[str, tuple[float, ...]]
    n_images: int

    def __post_init__(self):
        fams = {k: tuple(float(v) for v in vals) for k, vals in self.families.items()}
        for fam, vals in fams.items():
            if len(vals) != self.n_images:
                raise ValueError(f"profile for {fam!r} has wrong length")
        object.__setattr__(self, "families", fams)


def _family_rng_seed(master_seed: int, image_index: int, family_id: str) -> list[int]:
    code = int.from_bytes(hashlib.sha256(family_id.encode()).digest()[:4], "little")
    return [int(master_seed), int(image_index), code]


class EvalSession:
    """Warm-started cascade over one family's grid for a single image.

    ``probe(i)`` reports cumulative attack success at grid index ``i``;
    phases are computed lazily in grid order and memoized, so a probe never
    recomputes gradient work.  ``executions`` counts probes that missed the
    probe-level cache (the quantity the binary-search bound speaks about).
    """

    def __init__(
        self,
        model: SandboxModel,
        x: np.ndarray,
        y: int,
        family: AttackFamily,
        shape: Optional[tuple[int, int]] = None,
        rng: Optional[np.random.Generator] = None,
    ):
        self.model = model
        self.x = np.asarray(x, dtype=np.float64)
        self.y = int(y)
        self.family = family
        self.shape = shape
        self.rng = rng
        self.executions = 0
        self._phases: list[AttackResult] = []
        self._broken_at: list[bool] = []  # cumulative success per phase
        self._probed: dict[int, bool] = {}

    def _extend_to(self, index: int):
        while len(self._phases) <= index:
            j = len(self._phases)
            budget = budget_for(self.family, self.family.grid[j], shape=self.shape)
            warm = self._phases[-1].carry if self._phases else None
            result = run_attack(self.model, self.x, self.y, budget, rng=self.rng, warm=warm)
            self._phases.append(result)
            prev = self._broken_at[-1] if self._broken_at else False
            self._broken_at.append(prev or bool(result.success[0]))

    def probe(self, index: int) -> bool:
        if index in self._probed:
            return self._probed[index]
        self.executions += 1
        self._extend_to(index)
        hit = self._broken_at[index]
        self._probed[index] = hit
        return hit


def minimal_epsilon_search(
    model: SandboxModel,
    x: np.ndarray,
    y: int,
    family: AttackFamily,
    shape: Optional[tuple[int, int]] = None,
    rng: Optional[np.random.Generator] = None,
    exhaustive: bool = False,
    session: Optional[EvalSession] = None,
) -> float:
    """Smallest grid strength at which the family's attack succeeds.

    Returns 0 when the clean input is already misclassified and ``inf`` when
    the attack fails at the largest grid strength.  ``exhaustive`` scans the
    whole grid instead of bisecting; both paths give identical answers.
    """
    if int(predict(model, x)[0]) != int(y):
        return 0.0
    session = session or EvalSession(model, x, y, family, shape=shape, rng=rng)
    grid = family.grid
    last = len(grid) - 1
    if exhaustive:
        for i in range(len(grid)):
            if session.probe(i):
                return grid[i]
        return NEVER
    if not session.probe(last):
        return NEVER
    lo, hi = 0, last
    while lo < hi:
        mid = (lo + hi) // 2
        if session.probe(mid):
            hi = mid
        else:
            lo = mid + 1
    return grid[lo]


def accuracy_curve(
    profile_values: Sequence[float], family: AttackFamily
) -> dict[float, float]:
    """Robust accuracy at every grid strength plus the no-attack point.

    An image is robust at epsilon iff its minimal breaking strength is
    strictly larger; at epsilon 0 that is exactly clean accuracy.
    """
    values = np.asarray(profile_values, dtype=np.float64)
    if len(values) == 0:
        raise ValueError("empty profile")
    curve = {0.0: float((values > 0.0).mean())}
    for eps in family.grid:
        curve[eps] = float((values > eps).mean())
    return curve


@dataclass
class EvaluationOutcome:
    matrix: EvaluationMatrix
    profile: MinimalEpsilonProfile
    failures: list = field(default_factory=list)


def evaluate_model(
    model: SandboxModel,
    families: Sequence[AttackFamily],
    x_test: np.ndarray,
    y_test: np.ndarray,
    shape: Optional[tuple[int, int]] = None,
    master_seed: int = 0,
    jobs: int = 1,
    exhaustive: bool = False,
    max_failure_fraction: float = 0.01,
) -> EvaluationOutcome:
    """Minimal-epsilon search per (image, family), assembled into an
    evaluation matrix and a profile.

    Images are independent; with ``jobs > 1`` they are searched in a thread
    pool and reassembled by index, so the result does not depend on
    scheduling order.
    """
    x_test = np.asarray(x_test, dtype=np.float64)
    y_test = np.asarray(y_test, dtype=np.int64)
    n = len(y_test)
    failures: list[tuple[int, str]] = []

    def search_image(i: int):
        try:
            out: dict[str, float] = {}
            for fam in families:
                rng = np.random.default_rng(_family_rng_seed(master_seed, i, fam.id))
                out[fam.id] = minimal_epsilon_search(
                    model,
                    x_test[i],
                    int(y_test[i]),
                    fam,
                    shape=shape,
                    rng=rng,
                    exhaustive=exhaustive,
                )
            return i, out, None
        except Exception as exc:
            return i, None, f"{type(exc).__name__}: {exc}"

    results: dict[int, dict[str, float]] = {}
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(search_image, range(n)))
    else:
        outcomes = [search_image(i) for i in range(n)]
    for i, out, error in outcomes:
        if error is None:
            results[i] = out
        else:
            failures.append((i, error))

    kept = sorted(results)
    if failures and len(failures) > max_failure_fraction * n:
        raise EvaluationAborted(failures)

    profile_arrays = {
        fam.id: tuple(results[i][fam.id] for i in kept) for fam in families
    }
    profile = MinimalEpsilonProfile(
        model_id=model.model_id, families=profile_arrays, n_images=len(kept)
    )
    cells: dict[AttackInstance, float] = {}
    n_samples: dict[AttackInstance, int] = {}
    if families:
        clean_accs = []
        for fam in families:
            curve = accuracy_curve(profile_arrays[fam.id], fam)
            clean_accs.append(curve[0.0])
            for eps in fam.grid:
                inst = AttackInstance(fam.id, eps)
                cells[inst] = curve[eps]
                n_samples[inst] = len(kept)
        cells[CLEAN] = clean_accs[0]
    else:
        preds = np.array([int(predict(model, x_test[i])[0]) for i in kept])
        cells[CLEAN] = float((preds == y_test[kept]).mean()) if kept else 0.0
    n_samples[CLEAN] = len(kept)
    matrix = EvaluationMatrix(model.model_id, cells, n_samples)
    return EvaluationOutcome(matrix=matrix, profile=profile, failures=failures)


# ---------------------------------------------------------------------------
# Baseline table


class BaselineBuildError(RuntimeError):
    """Some baseline cell could not be trained; lists the offending cells."""

    def __init__(self, failed_cells: list[tuple[AttackInstance, int, str]]):
        self.failed_cells = failed_cells
        names = ", ".join(f"{c.label()} (seed {s})" for c, s, _ in failed_cells)
        super().__init__(f"baseline table incomplete: {names}")


def measure_robust_accuracy(
    model: SandboxModel,
    instance: AttackInstance,
    family: AttackFamily,
    x: np.ndarray,
    y: np.ndarray,
    shape: Optional[tuple[int, int]] = None,
) -> float:
    """Robust accuracy under a single attack instance (batched)."""
    if instance.is_clean:
        return float((predict(model, x) == y).mean())
    budget = budget_for(family, instance.epsilon, shape=shape)
    result = run_attack(model, x, y, budget)
    return 1.0 - float(result.success.mean())


def build_baseline_table(
    families: Sequence[AttackFamily],
    seeds: Sequence[int],
    dataset: SyntheticDataset,
    train_config: Optional[TrainConfig] = None,
    progress=None,
) -> BaselineTable:
    """Best-attainable accuracy per attack instance, approximated by training
    directly on each instance (one model per seed, accuracies averaged).

    The epsilon=0 cell is the clean test accuracy of standard training.
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    train_config = train_config or TrainConfig()
    shape = (dataset.config.height, dataset.config.width)
    cells: dict[AttackInstance, BaselineCell] = {}
    failed: list[tuple[AttackInstance, int, str]] = []

    def cell_for(defense: DefenseSpec, instance: AttackInstance, family):
        per_seed = []
        for seed in seeds:
            try:
                model = train(dataset, defense, families, train_config, seed=seed)
            except TrainingError as exc:
                failed.append((instance, seed, str(exc)))
                continue
            per_seed.append(
                measure_robust_accuracy(
                    model, instance, family, dataset.test_x, dataset.test_y, shape
                )
            )
        if per_seed and len(per_seed) == len(seeds):
            cells[instance] = BaselineCell.from_seeds(per_seed)
        if progress:
            progress(instance, cells.get(instance))

    cell_for(DefenseSpec.standard(), CLEAN, None)
    for family in families:
        for eps in family.grid:
            instance = AttackInstance(family.id, eps)
            cell_for(DefenseSpec.at(family.id, eps), instance, family)

    if failed:
        raise BaselineBuildError(failed)
    return BaselineTable(cells=cells, num_classes=dataset.num_classes)
