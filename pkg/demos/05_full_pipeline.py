"""The whole pipeline end to end on a reduced configuration: baselines,
three defenses, evaluation, metrics, both leaderboards, and visualization
datasets, all through the command-line interface.

Run:  python3 demos/05_full_pipeline.py
(writes into demos/out/; takes about a minute)
"""

import json
import pathlib

from multiatk.cli import main

HERE = pathlib.Path(__file__).parent
OUT = HERE / "out"
CONFIG = HERE / "out" / "demo_config.json"

OUT.mkdir(exist_ok=True)
CONFIG.write_text(
    json.dumps(
        {
            "schema_version": 1,
            "dataset": {"height": 8, "width": 8, "num_classes": 3,
                        "n_train": 400, "n_test": 100, "noise": 0.22, "seed": 7},
            "families": [
                {"id": "linf", "grid": [0.05, 0.1, 0.15, 0.2], "params": {}},
                {"id": "l2", "grid": [0.25, 0.5, 0.75, 1.0], "params": {}},
                {"id": "brightness", "grid": [0.125, 0.25, 0.375, 0.5],
                 "params": {"iterations": 8}},
            ],
            "baseline_seeds": [101, 202],
            "train": {"epochs": 40, "batch_size": 64, "learning_rate": 0.1,
                      "hidden_dim": 32, "val_fraction": 0.2},
            "train_seed": 11,
            "eval_seed": 5150,
            "alpha": 0.03,
        },
        indent=2,
    )
)

run = lambda *args: main(list(args)) == 0 or exit(1)
out = str(OUT)
config = str(CONFIG)

print("== baselines (direct training on every attack instance) ==")
run("baseline", "--config", config, "--out", out)

print("\n== defended models ==")
run("train", "--config", config, "--out", out, "--defense", "standard")
run("train", "--config", config, "--out", out, "--defense", "at:linf@0.1")
run("train", "--config", config, "--out", out, "--defense", "sat:linf@0.1,l2@0.5")

print("\n== evaluation ==")
models = sorted(str(p) for p in (OUT / "models").glob("*.json"))
run("eval", "--config", config, "--out", out, *models)

print("\n== metrics, rankings, visualization datasets ==")
run("metrics", "--config", config, "--out", out)
run("rank", "--out", out)
run("export-viz", "--config", config, "--out", out)

print("\n== average-case leaderboard ==")
board = json.loads((OUT / "leaderboard_avg.json").read_text())
for entry in board["entries"]:
    print(f"  #{entry['rank']} {entry['model_id']:24s} "
          f"cr_avg {entry['value']:6.2f}  clean {entry['clean_accuracy']:.3f}")

print("\nServe it:  python3 -m multiatk.cli serve --out demos/out --port 8000")
