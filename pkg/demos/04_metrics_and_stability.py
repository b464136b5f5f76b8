"""Competitiveness and stability metrics on a hand-sized example.

Shows the metric definitions in action without any training: a model's
robust accuracies are compared against the best attainable ones, both as a
weighted average of per-attack ratios and as the worst ratio, and the
stability constant links accuracy changes to attack-difficulty changes.

Run:  python3 demos/04_metrics_and_stability.py
"""

from multiatk import (
    attack_strength,
    cr_exp,
    cr_ind_avg,
    cr_ind_worst,
    cr_max,
    stability_constant,
)
from multiatk.metrics import BaselineCell, BaselineTable, EvaluationMatrix
from multiatk.threat import CLEAN, AttackInstance, AttackSet, KnowledgeSet

inst = {
    "clean": CLEAN,
    "l2@0.5": AttackInstance("l2", 0.5),
    "l2@1.0": AttackInstance("l2", 1.0),
    "linf@0.1": AttackInstance("linf", 0.1),
}

baselines = BaselineTable(
    {
        inst["clean"]: BaselineCell.from_seeds([0.94, 0.95, 0.96]),
        inst["l2@0.5"]: BaselineCell.from_seeds([0.89, 0.90, 0.91]),
        inst["l2@1.0"]: BaselineCell.from_seeds([0.88, 0.88, 0.88]),
        inst["linf@0.1"]: BaselineCell.from_seeds([0.80, 0.80, 0.80]),
    },
    num_classes=3,
)

model = EvaluationMatrix(
    "demo-defense",
    {
        inst["clean"]: 0.90,
        inst["l2@0.5"]: 0.60,
        inst["l2@1.0"]: 0.50,
        inst["linf@0.1"]: 0.35,
    },
)

attack_set = AttackSet(tuple(inst.values()))
print("Attack strengths (difficulty = error of direct training):")
for name, p in inst.items():
    print(f"  {name:10s} s = {attack_strength(p, baselines):.3f}")

avg = cr_ind_avg(model, attack_set, baselines)
worst = cr_ind_worst(model, attack_set, baselines)
print(f"\ncompetitiveness, average ratio : {avg.value:6.2f}")
print(f"competitiveness, worst ratio   : {worst.value:6.2f}")
print(f"competitiveness of expectations: {cr_exp(model, attack_set, baselines):6.2f}")
print(f"competitiveness of worst cases : {cr_max(model, attack_set, baselines):6.2f}")

# the defense trained on l2 up to 0.5, so that is all it "knows"
knowledge = KnowledgeSet(frozenset({inst["clean"], inst["l2@0.5"]}))
sc = stability_constant(model, attack_set, knowledge, baselines, alpha=0.03)
print(f"\nstability constant (alpha=0.03): {sc.value:.2f}")
print("  (|0.60 - 0.50| accuracy drop over the 0.02 strength gap between")
print("   the known l2@0.5 attack and the similar-difficulty l2@1.0)")
