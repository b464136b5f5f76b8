"""Per-image minimal breaking strength and the robust-accuracy curves it
generates.  Optionally saves a plot when matplotlib is available.

Run:  python3 demos/03_minimal_epsilon_curves.py
"""

import math

from multiatk import accuracy_curve, evaluate_model
from multiatk.config import RunConfig
from multiatk.sandbox import DefenseSpec, make_dataset, train

config = RunConfig()
dataset = make_dataset(config.dataset)
model = train(
    dataset,
    DefenseSpec.at("linf", 0.1),
    config.families,
    config.train,
    seed=config.train_seed,
)

families = [f for f in config.families if f.id in ("linf", "l2")]
outcome = evaluate_model(
    model,
    families,
    dataset.test_x,
    dataset.test_y,
    shape=(config.dataset.height, config.dataset.width),
    master_seed=config.eval_seed,
)

profile = outcome.profile
print("First ten images, smallest breaking strength per family:")
for fam in families:
    values = profile.families[fam.id][:10]
    pretty = ["inf" if math.isinf(v) else f"{v:g}" for v in values]
    print(f"  {fam.id:6s} {pretty}")

print("\nRobust-accuracy curves (accuracy at strength, non-increasing):")
for fam in families:
    curve = accuracy_curve(profile.families[fam.id], fam)
    line = "  ".join(f"{eps:g}:{acc:.2f}" for eps, acc in curve.items())
    print(f"  {fam.id:6s} {line}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for fam in families:
        curve = accuracy_curve(profile.families[fam.id], fam)
        ax.plot(list(curve), list(curve.values()), marker="o", label=fam.id)
    ax.set_xlabel("attack strength")
    ax.set_ylabel("robust accuracy")
    ax.set_title("l-inf trained defense under graded attacks")
    ax.legend()
    fig.tight_layout()
    fig.savefig("demos/curves.png", dpi=120)
    print("\nsaved demos/curves.png")
except ImportError:
    pass
