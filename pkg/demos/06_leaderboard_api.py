"""Query the leaderboard API: official rankings, a user-filtered attack set,
and the comparison visualization datasets.

Run demos/05_full_pipeline.py first (it creates demos/out), then:
    python3 demos/06_leaderboard_api.py
"""

import json
import pathlib
import threading
import time
import urllib.parse
import urllib.request

import uvicorn

from multiatk.server import create_app

OUT = pathlib.Path(__file__).parent / "out"
PORT = 8734

if not (OUT / "reports.json").exists():
    raise SystemExit("demos/out is missing; run demos/05_full_pipeline.py first")

server = uvicorn.Server(
    uvicorn.Config(create_app(str(OUT)), host="127.0.0.1", port=PORT, log_level="error")
)
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.05)
base = f"http://127.0.0.1:{PORT}"


def get(path):
    with urllib.request.urlopen(base + path) as response:
        return json.load(response)


def post(path, payload):
    request = urllib.request.Request(
        base + path,
        data=json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"},
    )
    with urllib.request.urlopen(request) as response:
        return json.load(response)


print("Registered attacks:")
for fam in get("/api/attacks"):
    print(f"  {fam['id']:12s} {len(fam['grid'])} strengths up to {fam['grid'][-1]}")

print("\nOfficial rankings (independent of any filtering):")
for metric in ("cr_ind_avg", "cr_ind_worst"):
    board = get(f"/api/leaderboard?metric={metric}")
    row = ", ".join(f"#{e['rank']} {e['model_id']} ({e['value']:.2f})" for e in board["entries"])
    print(f"  {metric:13s} {row}")

model_ids = [m["model_id"] for m in get("/api/models")]
filtered = post(
    "/api/metrics",
    {
        "model_ids": model_ids,
        "attack_filter": {"families": ["linf"], "include_clean": True},
        "alpha": 0.03,
    },
)
print("\nRecomputed for the linf family only:")
for model_id, report in filtered["reports"].items():
    print(f"  {model_id:24s} cr_avg {report['cr_ind_avg']:.2f}  cr_worst {report['cr_ind_worst']:.2f}")

chosen = ",".join(urllib.parse.quote(m, safe="") for m in model_ids[:2])
viz = get(f"/api/viz?models={chosen}")
first = viz["models"][0]
print(f"\nVisualization payload for {first}: "
      f"{len(viz['datasets'][first]['scatter'])} scatter points, "
      f"families {sorted(viz['datasets'][first]['curves'])}")

server.should_exit = True
thread.join(timeout=5)
