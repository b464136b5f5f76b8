"""Operator entry point: baseline building, training, evaluation, metric
computation, ranking, visualization export, and the leaderboard server.

Every command is deterministic given (config, seeds): outputs carry no
timestamps, locale-dependent text, or machine identifiers.  One command may
run against an output directory at a time (guarded by a lock file).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
from typing import Optional, Sequence

from . import store
from .config import RunConfig, load_config, save_config
from .harness import build_baseline_table, evaluate_model
from .metrics import MetricReport, compute_report, rank_leaderboard
from .sandbox.data import make_dataset
from .sandbox.train import DefenseSpec, train
from .threat import AttackInstance, ConfigurationError

JOBS_ENV = "MULTIATK_MAX_JOBS"


class UsageError(ValueError):
    pass


class PipelineStateError(RuntimeError):
    """An input produced by an earlier pipeline stage is missing."""


@contextlib.contextmanager
def output_lock(out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    lock_path = os.path.join(out_dir, ".lock")
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise UsageError(
            f"output directory {out_dir!r} is locked by another command "
            f"(remove {lock_path} if that command crashed)"
        ) from None
    try:
        os.close(fd)
        yield
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.remove(lock_path)


def _require(path: str, produced_by: str) -> str:
    if not os.path.exists(path):
        raise PipelineStateError(
            f"{path} does not exist; run '{produced_by}' first"
        )
    return path


def _effective_jobs(requested: int) -> int:
    cap = os.environ.get(JOBS_ENV)
    if cap:
        return max(1, min(requested, int(cap)))
    return max(1, requested)


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    if getattr(args, "families", None):
        config = config.restrict_families(args.families.split(","))
    if getattr(args, "grid_size", None):
        config = config.with_grid_size(args.grid_size)
    if getattr(args, "seeds", None):
        config.baseline_seeds = tuple(int(s) for s in args.seeds.split(","))
    if getattr(args, "alpha", None) is not None:
        config.alpha = args.alpha
    if getattr(args, "jobs", None):
        config.jobs = args.jobs
    config.jobs = _effective_jobs(config.jobs)
    return config


def parse_defense(text: str) -> DefenseSpec:
    """Parse 'standard', 'at:linf@0.1', or 'avg|max|sat:linf@0.1,l2@0.5'."""
    text = text.strip()
    if text == "standard":
        return DefenseSpec.standard()
    if ":" not in text:
        raise UsageError(
            f"cannot parse defense {text!r}; expected 'standard' or "
            "'<kind>:<family>@<eps>[,<family>@<eps>...]'"
        )
    kind, _, rest = text.partition(":")
    instances = []
    for part in rest.split(","):
        fam, _, eps = part.partition("@")
        if not fam or not eps:
            raise UsageError(f"cannot parse attack instance {part!r}")
        instances.append(AttackInstance(fam, float(eps)))
    return DefenseSpec(kind, tuple(instances))


# ---------------------------------------------------------------------------
# Commands


def cmd_baseline(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    with output_lock(args.out):
        dataset = make_dataset(config.dataset)
        table = build_baseline_table(
            config.families,
            config.baseline_seeds,
            dataset,
            config.train,
            progress=(
                (lambda inst, cell: print(f"  acc*({inst.label()}) = {cell.acc_star:.4f}"))
                if args.verbose
                else None
            ),
        )
        store.write_baselines(table, os.path.join(args.out, "baselines.json"))
        save_config(config, os.path.join(args.out, "config.json"))
    print(f"wrote {os.path.join(args.out, 'baselines.json')} ({len(table.cells)} cells)")
    return 0


def cmd_train(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    defense = parse_defense(args.defense)
    seed = args.seed if args.seed is not None else config.train_seed
    with output_lock(args.out):
        dataset = make_dataset(config.dataset)
        model = train(
            dataset, defense, config.families, config.train, seed=seed, model_id=args.id
        )
        path = os.path.join(args.out, "models", f"{model.model_id}.json")
        store.write_model(model, path)
    print(f"wrote {path} (best epoch {model.provenance['best_epoch']})")
    return 0


def _ensure_monotone(records, model_id: str):
    """Harness-produced curves must be non-increasing in epsilon; this is
    structural (cells come from minimal-epsilon counting) and enforced here,
    unlike externally ingested records which are only warned about."""
    by_family: dict[str, list] = {}
    for r in records:
        if not r.instance.is_clean:
            by_family.setdefault(r.instance.family, []).append(r)
    for family, rs in by_family.items():
        rs.sort(key=lambda r: r.instance.epsilon)
        accs = [r.accuracy for r in rs]
        if any(b > a + 1e-12 for a, b in zip(accs, accs[1:])):
            raise RuntimeError(
                f"harness produced a non-monotone curve for {model_id!r}/{family!r}"
            )


def _merge_into_bundle(bundle_path: str, entry, records) -> store.RecordBundle:
    if os.path.exists(bundle_path):
        bundle = store.import_records(bundle_path)
        bundle.models = [m for m in bundle.models if m.model_id != entry.model_id]
        bundle.records = [r for r in bundle.records if r.model_id != entry.model_id]
    else:
        bundle = store.RecordBundle(models=[], records=[])
    bundle.models.append(entry)
    bundle.records.extend(records)
    bundle.models.sort(key=lambda m: m.model_id)
    bundle.records.sort(key=lambda r: (r.model_id, r.instance.family, r.instance.epsilon))
    return bundle


def cmd_eval(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    with output_lock(args.out):
        dataset = make_dataset(config.dataset)
        shape = (config.dataset.height, config.dataset.width)
        bundle_path = os.path.join(args.out, "bundle.json")
        for model_path in args.models:
            model = store.read_model(_require(model_path, "train"))
            outcome = evaluate_model(
                model,
                config.families,
                dataset.test_x,
                dataset.test_y,
                shape=shape,
                master_seed=config.eval_seed,
                jobs=config.jobs,
            )
            prov = model.provenance
            entry = store.ModelEntry(
                model_id=model.model_id,
                display_name=str(prov.get("display_name", model.model_id)),
                defense_kind=str(prov.get("defense_kind", "unknown")),
                training=tuple(
                    (t["family"], float(t["epsilon"]))
                    for t in prov.get("training", [])
                ),
                architecture=str(prov.get("architecture", "")),
                notes=str(prov.get("notes", "")),
            )
            records = [
                store.AccuracyRecord(
                    model.model_id, inst, acc, outcome.matrix.n_samples[inst]
                )
                for inst, acc in sorted(
                    outcome.matrix.cells.items(),
                    key=lambda kv: (not kv[0].is_clean, kv[0].family, kv[0].epsilon),
                )
            ]
            _ensure_monotone(records, model.model_id)
            bundle = _merge_into_bundle(bundle_path, entry, records)
            store.write_bundle(bundle, bundle_path)
            store.write_profile(
                model.model_id,
                outcome.profile.families,
                outcome.profile.n_images,
                os.path.join(args.out, "profiles", f"{model.model_id}.json"),
            )
            print(
                f"evaluated {model.model_id}: clean "
                f"{outcome.matrix.clean_accuracy:.4f}, "
                f"{len(records) - 1} attacked cells"
            )
    return 0


def compute_reports(
    bundle: store.RecordBundle,
    baselines,
    families,
    alpha: float,
) -> list[MetricReport]:
    """One report per model over its evaluated instances, restricted to the
    given family registry (plus the no-attack entry)."""
    ids = {f.id for f in families}
    reports = []
    for model_id in bundle.model_ids():
        matrix = bundle.matrix_for(model_id)
        attack_set = bundle.evaluated_set(model_id)
        keep = [p for p in attack_set if p.is_clean or p.family in ids]
        if len(keep) < len(attack_set):
            attack_set = attack_set.restricted(keep)
        knowledge = bundle.model(model_id).knowledge_set(families)
        reports.append(compute_report(matrix, attack_set, baselines, knowledge, alpha))
    return reports


def cmd_metrics(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    with output_lock(args.out):
        # validate records against the full registry; the --families
        # restriction only narrows what gets scored
        bundle = store.import_records(
            _require(os.path.join(args.out, "bundle.json"), "eval"),
            load_config(args.config).families,
        )
        baselines = store.read_baselines(
            _require(os.path.join(args.out, "baselines.json"), "baseline")
        )
        reports = compute_reports(bundle, baselines, config.families, config.alpha)
        store.write_reports(reports, config.alpha, os.path.join(args.out, "reports.json"))
    print(f"wrote reports.json ({len(reports)} models)")
    return 0


def cmd_rank(args) -> int:
    with output_lock(args.out):
        reports, _ = store.read_reports(
            _require(os.path.join(args.out, "reports.json"), "metrics")
        )
        for metric, name in (
            ("cr_ind_avg", "leaderboard_avg.json"),
            ("cr_ind_worst", "leaderboard_worst.json"),
        ):
            entries = rank_leaderboard(reports, metric)
            store.write_leaderboard(entries, metric, os.path.join(args.out, name))
            top = entries[0] if entries else None
            print(f"wrote {name}" + (f" (top: {top.model_id})" if top else ""))
    return 0


def cmd_export_viz(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    with output_lock(args.out):
        bundle = store.import_records(
            _require(os.path.join(args.out, "bundle.json"), "eval"), config.families
        )
        baselines = store.read_baselines(
            _require(os.path.join(args.out, "baselines.json"), "baseline")
        )
        reports, _ = store.read_reports(
            _require(os.path.join(args.out, "reports.json"), "metrics")
        )
        by_id = {r.model_id: r for r in reports}
        for model_id in bundle.model_ids():
            payload = store.build_visualization(
                bundle, baselines, by_id[model_id], config.families, model_id
            )
            store.write_visualization(
                payload, os.path.join(args.out, "viz", f"{model_id}.json")
            )
        print(f"wrote viz datasets for {len(bundle.model_ids())} models")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    _require(os.path.join(args.out, "bundle.json"), "eval")
    app = create_app(args.out)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multiatk",
        description="Benchmark desk-scale models against graded multi-attack threat grids.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="run configuration JSON")
            p.add_argument("--families", help="comma-separated family subset")
            p.add_argument("--grid-size", type=int, help="points per family grid")
            p.add_argument("--seeds", help="comma-separated baseline seeds")
            p.add_argument("--alpha", type=float, help="stability strength window")
            p.add_argument("--jobs", type=int, help="parallel evaluation workers")
        p.add_argument("--out", required=True, help="output bundle directory")

    p = sub.add_parser("baseline", help="train per-attack baselines and write baselines.json")
    common(p)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("train", help="train one defended model")
    common(p)
    p.add_argument("--defense", required=True, help="standard | at:linf@0.1 | avg:...,... | max:... | sat:...")
    p.add_argument("--seed", type=int, help="training seed (default from config)")
    p.add_argument("--id", help="model id (default derived from defense+seed)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate model checkpoints into the bundle")
    common(p)
    p.add_argument("models", nargs="+", help="model checkpoint paths")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("metrics", help="compute metric reports for the bundle")
    common(p)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("rank", help="write both leaderboard files")
    common(p, config=False)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("export-viz", help="write per-model visualization datasets")
    common(p)
    p.set_defaults(func=cmd_export_viz)

    p = sub.add_parser("serve", help="serve the leaderboard API and UI")
    common(p, config=False)
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        json.dump({"error": "usage", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except PipelineStateError as exc:
        json.dump({"error": "pipeline-state", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    except (ConfigurationError, store.SchemaError, FileNotFoundError) as exc:
        json.dump(
            {"error": type(exc).__name__, "message": str(exc)}, sys.stderr
        )
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        json.dump(
            {"error": type(exc).__name__, "message": str(exc)}, sys.stderr
        )
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
