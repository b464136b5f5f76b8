import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from multiatk.metrics import BaselineCell, BaselineTable, EvaluationMatrix
from multiatk.threat import CLEAN, AttackInstance, AttackSet


def random_evaluation(rng: np.random.Generator, max_instances: int = 12):
    """A random (matrix, attack set, baselines) triple plus the plain-dict
    mirror the oracles consume."""
    families = ["linf", "l2", "brightness"]
    n_inst = int(rng.integers(2, max_instances + 1))
    instances = [CLEAN]
    used = {(CLEAN.family, 0.0)}
    while len(instances) < n_inst:
        fam = families[int(rng.integers(0, len(families)))]
        eps = float(np.round(rng.uniform(0.01, 1.0), 3))
        if (fam, eps) in used:
            continue
        used.add((fam, eps))
        instances.append(AttackInstance(fam, eps))
    if rng.random() < 0.5:
        weights = None  # uniform
        attack_set = AttackSet(tuple(instances))
    else:
        raw = rng.uniform(0.05, 1.0, size=len(instances))
        weights = raw / raw.sum()
        attack_set = AttackSet(tuple(instances), tuple(weights))
    acc = {}
    acc_star = {}
    for inst in instances:
        acc[inst] = float(rng.uniform(0.0, 1.0))
        # occasional degenerate baseline cell
        acc_star[inst] = 0.0 if rng.random() < 0.08 else float(rng.uniform(0.05, 1.0))
    if acc_star[CLEAN] == 0.0:
        acc_star[CLEAN] = float(rng.uniform(0.5, 1.0))
    matrix = EvaluationMatrix("rand", acc)
    baselines = BaselineTable(
        {inst: BaselineCell((v,), v) for inst, v in acc_star.items()}, num_classes=3
    )
    keys = [(p.family, p.epsilon) for p in attack_set]
    mirror = {
        "keys": keys,
        "acc": {(p.family, p.epsilon): acc[p] for p in attack_set},
        "acc_star": {(p.family, p.epsilon): acc_star[p] for p in attack_set},
        "weights": {
            (p.family, p.epsilon): w
            for p, w in zip(attack_set.instances, attack_set.weights)
        },
    }
    return matrix, attack_set, baselines, mirror


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
