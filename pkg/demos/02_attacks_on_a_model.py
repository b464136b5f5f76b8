"""Train a plain classifier and watch each attack family degrade it.

Run:  python3 demos/02_attacks_on_a_model.py
"""

import numpy as np

from multiatk.config import RunConfig
from multiatk.sandbox import DefenseSpec, budget_for, make_dataset, run_attack, train
from multiatk.sandbox.model import predict

config = RunConfig()
dataset = make_dataset(config.dataset)
model = train(
    dataset, DefenseSpec.standard(), config.families, config.train, seed=config.train_seed
)
clean = (predict(model, dataset.test_x) == dataset.test_y).mean()
print(f"standard model, clean test accuracy {clean:.3f}\n")

print(f"{'attack':16s} {'robust acc':>10s}   {'constraint use':>14s}")
for family in config.families:
    eps = family.grid[-1]
    budget = budget_for(family, eps, shape=(config.dataset.height, config.dataset.width))
    result = run_attack(model, dataset.test_x, dataset.test_y, budget)
    robust = 1.0 - result.success.mean()
    if result.param is not None:
        used = np.abs(result.param).max()
    else:
        delta = result.x_adv - dataset.test_x
        used = {
            "linf": np.abs(delta).max(),
            "l2": np.sqrt((delta**2).sum(axis=1)).max(),
            "l1": np.abs(delta).sum(axis=1).max(),
        }[family.id]
    label = f"{family.id}@{eps:g}"
    print(f"{label:16s} {robust:10.3f}   {used:10.4f} <= {eps:g}")
