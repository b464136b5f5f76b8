"""Persistence and interchange for leaderboard bundles.

Everything is UTF-8 JSON with an explicit ``schema_version``.  Floats are
serialized with Python's shortest-round-trip representation, so a value read
back compares equal bit for bit and re-exports are byte-identical.

Bundle directory layout (all paths relative to the bundle root)::

    bundle.json            models + accuracy records
    baselines.json         best-attainable accuracy per attack instance
    profiles/<model>.json  per-image minimal-epsilon profiles
    reports.json           metric reports for every model
    leaderboard_avg.json   ranking by average competitiveness
    leaderboard_worst.json ranking by worst-case competitiveness
    viz/<model>.json       performance-visualization datasets
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import jsonschema

from .metrics import (
    BaselineCell,
    BaselineTable,
    CRInOut,
    EvaluationMatrix,
    MetricReport,
    RankedEntry,
    SingleCR,
    cr_in_out,
)
from .threat import (
    CLEAN,
    AttackFamily,
    AttackInstance,
    AttackSet,
    ConfigurationError,
    KnowledgeSet,
    build_knowledge_set,
)

SCHEMA_VERSION = 1

#: Most defenses a comparison visualization may overlay.
MAX_COMPARE_MODELS = 5


class SchemaError(ValueError):
    """A file failed schema validation; the message carries the JSON path."""


# ---------------------------------------------------------------------------
# JSON schemas

_MODEL_SCHEMA = {
    "type": "object",
    "required": ["model_id", "display_name", "defense_kind", "training"],
    "properties": {
        "model_id": {"type": "string", "minLength": 1},
        "display_name": {"type": "string"},
        "defense_kind": {"type": "string"},
        "training": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["family", "epsilon"],
                "properties": {
                    "family": {"type": "string"},
                    "epsilon": {"type": "number", "minimum": 0},
                },
            },
        },
        "architecture": {"type": "string"},
        "notes": {"type": "string"},
    },
}

_RECORD_SCHEMA = {
    "type": "object",
    "required": ["model_id", "family", "epsilon", "accuracy"],
    "properties": {
        "model_id": {"type": "string"},
        "family": {"type": "string"},
        "epsilon": {"type": "number", "minimum": 0},
        "accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "n_samples": {"type": "integer", "minimum": 0},
    },
}

BUNDLE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "models", "records"],
    "properties": {
        "schema_version": {"type": "integer", "minimum": 1},
        "models": {"type": "array", "items": _MODEL_SCHEMA},
        "records": {"type": "array", "items": _RECORD_SCHEMA},
        "baseline_ref": {"type": "string"},
    },
}

BASELINES_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "num_classes", "cells"],
    "properties": {
        "schema_version": {"type": "integer", "minimum": 1},
        "num_classes": {"type": "integer", "minimum": 2},
        "cells": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["family", "epsilon", "per_seed", "acc_star"],
                "properties": {
                    "family": {"type": "string"},
                    "epsilon": {"type": "number", "minimum": 0},
                    "per_seed": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "number", "minimum": 0, "maximum": 1},
                    },
                    "acc_star": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}

PROFILE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "model_id", "n_images", "families"],
    "properties": {
        "schema_version": {"type": "integer", "minimum": 1},
        "model_id": {"type": "string"},
        "n_images": {"type": "integer", "minimum": 0},
        "families": {
            "type": "object",
            # null encodes "never succeeds on the grid"
            "additionalProperties": {
                "type": "array",
                "items": {"type": ["number", "null"], "minimum": 0},
            },
        },
    },
}

FAMILIES_SCHEMA = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["id", "grid"],
        "properties": {
            "id": {"type": "string"},
            "grid": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "number", "exclusiveMinimum": 0},
            },
            "params": {"type": "object"},
        },
    },
}

_SINGLE_CR_SCHEMA = {
    "type": "object",
    "additionalProperties": {
        "type": "object",
        "required": ["avg", "worst"],
        "properties": {"avg": {"type": "number"}, "worst": {"type": "number"}},
    },
}

_REPORT_SCHEMA = {
    "type": "object",
    "required": [
        "model_id",
        "clean_accuracy",
        "cr_ind_avg",
        "cr_ind_worst",
        "cr_exp",
        "cr_max",
        "single_cr",
        "muar",
        "sc",
        "sc_empty_pair_set",
        "excluded_instances",
    ],
    "properties": {
        "model_id": {"type": "string"},
        "clean_accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "cr_ind_avg": {"type": ["number", "null"], "minimum": 0},
        "cr_ind_worst": {"type": ["number", "null"], "minimum": 0},
        "cr_exp": {"type": ["number", "null"], "minimum": 0},
        "cr_max": {"type": ["number", "null"], "minimum": 0},
        "single_cr": _SINGLE_CR_SCHEMA,
        "muar": {"type": ["number", "null"]},
        "sc": {"type": ["number", "null"], "minimum": 0},
        "sc_empty_pair_set": {"type": "boolean"},
        "excluded_instances": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["family", "epsilon"],
            },
        },
    },
}

REPORTS_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "alpha", "reports"],
    "properties": {
        "schema_version": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "reports": {"type": "array", "items": _REPORT_SCHEMA},
    },
}

LEADERBOARD_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "metric", "entries"],
    "properties": {
        "schema_version": {"type": "integer", "minimum": 1},
        "metric": {"enum": ["cr_ind_avg", "cr_ind_worst"]},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["rank", "model_id", "value", "clean_accuracy"],
                "properties": {
                    "rank": {"type": "integer", "minimum": 1},
                    "model_id": {"type": "string"},
                    "value": {"type": "number"},
                    "clean_accuracy": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}

VIZ_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "model_id", "scatter", "curves", "cr_in_out", "single_cr"],
    "properties": {
        "schema_version": {"type": "integer", "minimum": 1},
        "model_id": {"type": "string"},
        "scatter": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["family", "epsilon", "defense_accuracy", "baseline_accuracy"],
            },
        },
        "curves": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["epsilon", "accuracy"],
                },
            },
        },
        "cr_in_out": {
            "type": "object",
            "required": ["cr_in", "cr_out"],
            "properties": {
                "cr_in": {"type": ["number", "null"]},
                "cr_out": {"type": ["number", "null"]},
            },
        },
        "single_cr": _SINGLE_CR_SCHEMA,
    },
}


def _validate(payload, schema, what: str):
    try:
        jsonschema.validate(payload, schema)
    except jsonschema.ValidationError as exc:
        path = "/" + "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{what}: invalid at {path or '/'}: {exc.message}") from None


def _check_version(payload, what: str):
    version = payload.get("schema_version")
    if not isinstance(version, int) or version < 1 or version > SCHEMA_VERSION:
        raise SchemaError(
            f"{what}: unsupported schema_version {version!r} "
            f"(this build reads up to {SCHEMA_VERSION})"
        )


# ---------------------------------------------------------------------------
# Value types


@dataclass(frozen=True)
class ModelEntry:
    model_id: str
    display_name: str
    defense_kind: str
    training: tuple[tuple[str, float], ...]  # (family, epsilon) pairs
    architecture: str = ""
    notes: str = ""

    def knowledge_set(self, families: Sequence[AttackFamily]) -> KnowledgeSet:
        # train-time families outside the registry contribute nothing to the
        # evaluated threat grid, so they are dropped rather than rejected
        known = {f.id for f in families}
        config: dict[str, float] = {}
        for fam, eps in self.training:
            if fam in known:
                config[fam] = max(config.get(fam, 0.0), eps)
        return build_knowledge_set(config, families)


@dataclass(frozen=True)
class AccuracyRecord:
    model_id: str
    instance: AttackInstance
    accuracy: float
    n_samples: int = 0


@dataclass
class RecordBundle:
    """Models plus their measured robust accuracies."""

    models: list[ModelEntry]
    records: list[AccuracyRecord]
    baseline_ref: str = "baselines.json"
    schema_version: int = SCHEMA_VERSION

    def model_ids(self) -> list[str]:
        return [m.model_id for m in self.models]

    def model(self, model_id: str) -> ModelEntry:
        for m in self.models:
            if m.model_id == model_id:
                return m
        raise KeyError(f"unknown model {model_id!r}")

    def matrix_for(self, model_id: str) -> EvaluationMatrix:
        cells = {r.instance: r.accuracy for r in self.records if r.model_id == model_id}
        n_samples = {
            r.instance: r.n_samples for r in self.records if r.model_id == model_id
        }
        return EvaluationMatrix(model_id, cells, n_samples)

    def evaluated_set(self, model_id: str) -> AttackSet:
        """The model's evaluated instances as a uniform attack set, no-attack
        entry first, then family/epsilon order."""
        insts = sorted(
            {r.instance for r in self.records if r.model_id == model_id},
            key=lambda p: (not p.is_clean, p.family, p.epsilon),
        )
        return AttackSet(tuple(insts))


# ---------------------------------------------------------------------------
# Encoding helpers


def _instance_json(instance: AttackInstance) -> dict:
    return {"family": instance.family, "epsilon": instance.epsilon}


def _dump(payload, path: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _load(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Families


def families_to_json(families: Sequence[AttackFamily]) -> list:
    return [
        {"id": f.id, "grid": list(f.grid), "params": dict(f.params)} for f in families
    ]


def families_from_json(payload) -> list[AttackFamily]:
    _validate(payload, FAMILIES_SCHEMA, "families")
    return [
        AttackFamily(f["id"], tuple(f["grid"]), f.get("params", {})) for f in payload
    ]


# ---------------------------------------------------------------------------
# Bundle import/export


def bundle_to_json(bundle: RecordBundle) -> dict:
    return {
        "schema_version": bundle.schema_version,
        "baseline_ref": bundle.baseline_ref,
        "models": [
            {
                "model_id": m.model_id,
                "display_name": m.display_name,
                "defense_kind": m.defense_kind,
                "training": [
                    {"family": fam, "epsilon": eps} for fam, eps in m.training
                ],
                "architecture": m.architecture,
                "notes": m.notes,
            }
            for m in bundle.models
        ],
        "records": [
            {
                "model_id": r.model_id,
                "family": r.instance.family,
                "epsilon": r.instance.epsilon,
                "accuracy": r.accuracy,
                "n_samples": r.n_samples,
            }
            for r in bundle.records
        ],
    }


def _check_monotone_curves(bundle: RecordBundle):
    """Warn about within-family accuracy curves that increase with epsilon;
    externally ingested records are tolerated, not rejected."""
    by_model_family: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for r in bundle.records:
        if r.instance.is_clean:
            continue
        by_model_family.setdefault((r.model_id, r.instance.family), []).append(
            (r.instance.epsilon, r.accuracy)
        )
    for (model_id, family), points in by_model_family.items():
        points.sort()
        accs = [a for _, a in points]
        if any(b > a + 1e-12 for a, b in zip(accs, accs[1:])):
            warnings.warn(
                f"non-monotone accuracy curve for model {model_id!r}, "
                f"family {family!r}",
                stacklevel=3,
            )


def import_records(
    path: str, families: Optional[Sequence[AttackFamily]] = None
) -> RecordBundle:
    """Read and validate a bundle file.

    With a family registry given, records must reference registered families
    and on-grid strengths; curve monotonicity is only warned about.
    """
    payload = _load(path)
    _validate(payload, BUNDLE_SCHEMA, os.path.basename(path))
    _check_version(payload, os.path.basename(path))
    models = [
        ModelEntry(
            model_id=m["model_id"],
            display_name=m.get("display_name", m["model_id"]),
            defense_kind=m.get("defense_kind", "unknown"),
            training=tuple((t["family"], float(t["epsilon"])) for t in m["training"]),
            architecture=m.get("architecture", ""),
            notes=m.get("notes", ""),
        )
        for m in payload["models"]
    ]
    ids = [m.model_id for m in models]
    if len(set(ids)) != len(ids):
        raise SchemaError("bundle: duplicate model_id in /models")
    known = set(ids)
    registered = {f.id: f for f in families} if families is not None else None
    records = []
    for i, r in enumerate(payload["records"]):
        if r["model_id"] not in known:
            raise SchemaError(
                f"bundle: /records/{i}/model_id {r['model_id']!r} is not declared"
            )
        instance = AttackInstance(r["family"], float(r["epsilon"]))
        if registered is not None and not instance.is_clean:
            if instance.family not in registered:
                raise SchemaError(
                    f"bundle: /records/{i}/family {instance.family!r} is not "
                    f"registered; known families: {sorted(registered)}"
                )
            if instance.epsilon not in registered[instance.family].grid:
                raise SchemaError(
                    f"bundle: /records/{i}/epsilon {instance.epsilon!r} is not "
                    f"on the {instance.family!r} grid"
                )
        records.append(
            AccuracyRecord(
                model_id=r["model_id"],
                instance=instance,
                accuracy=float(r["accuracy"]),
                n_samples=int(r.get("n_samples", 0)),
            )
        )
    bundle = RecordBundle(
        models=models,
        records=records,
        baseline_ref=payload.get("baseline_ref", "baselines.json"),
        schema_version=payload["schema_version"],
    )
    _check_monotone_curves(bundle)
    return bundle


def write_bundle(bundle: RecordBundle, path: str):
    payload = bundle_to_json(bundle)
    _validate(payload, BUNDLE_SCHEMA, "bundle (outgoing)")
    _dump(payload, path)


# ---------------------------------------------------------------------------
# Baselines


def baselines_to_json(table: BaselineTable) -> dict:
    cells = sorted(
        table.cells.items(), key=lambda kv: (not kv[0].is_clean, kv[0].family, kv[0].epsilon)
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "num_classes": table.num_classes,
        "cells": [
            {
                "family": inst.family,
                "epsilon": inst.epsilon,
                "per_seed": list(cell.per_seed),
                "acc_star": cell.acc_star,
            }
            for inst, cell in cells
        ],
    }


def write_baselines(table: BaselineTable, path: str):
    _dump(baselines_to_json(table), path)


def read_baselines(path: str) -> BaselineTable:
    payload = _load(path)
    _validate(payload, BASELINES_SCHEMA, os.path.basename(path))
    _check_version(payload, os.path.basename(path))
    cells = {
        AttackInstance(c["family"], float(c["epsilon"])): BaselineCell(
            tuple(float(a) for a in c["per_seed"]), float(c["acc_star"])
        )
        for c in payload["cells"]
    }
    return BaselineTable(cells=cells, num_classes=int(payload["num_classes"]))


# ---------------------------------------------------------------------------
# Profiles


def profile_to_json(model_id: str, families: Mapping[str, Sequence[float]], n_images: int) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "model_id": model_id,
        "n_images": n_images,
        "families": {
            fam: [None if math.isinf(v) else v for v in values]
            for fam, values in families.items()
        },
    }


def write_profile(model_id: str, families: Mapping[str, Sequence[float]], n_images: int, path: str):
    _dump(profile_to_json(model_id, families, n_images), path)


def read_profile(path: str) -> tuple[str, dict[str, tuple[float, ...]], int]:
    payload = _load(path)
    _validate(payload, PROFILE_SCHEMA, os.path.basename(path))
    _check_version(payload, os.path.basename(path))
    families = {
        fam: tuple(math.inf if v is None else float(v) for v in values)
        for fam, values in payload["families"].items()
    }
    return payload["model_id"], families, int(payload["n_images"])


# ---------------------------------------------------------------------------
# Reports and leaderboards


def report_to_json(report: MetricReport) -> dict:
    return {
        "model_id": report.model_id,
        "clean_accuracy": report.clean_accuracy,
        "cr_ind_avg": report.cr_ind_avg,
        "cr_ind_worst": report.cr_ind_worst,
        "cr_exp": report.cr_exp,
        "cr_max": report.cr_max,
        "single_cr": {
            fam: {"avg": s.avg, "worst": s.worst} for fam, s in report.single_cr.items()
        },
        "muar": report.muar,
        "sc": report.sc,
        "sc_empty_pair_set": report.sc_empty_pair_set,
        "excluded_instances": [_instance_json(p) for p in report.excluded_instances],
    }


def report_from_json(payload: dict) -> MetricReport:
    return MetricReport(
        model_id=payload["model_id"],
        clean_accuracy=payload["clean_accuracy"],
        cr_ind_avg=payload["cr_ind_avg"],
        cr_ind_worst=payload["cr_ind_worst"],
        cr_exp=payload["cr_exp"],
        cr_max=payload["cr_max"],
        single_cr={
            fam: SingleCR(s["avg"], s["worst"], ())
            for fam, s in payload["single_cr"].items()
        },
        muar=payload["muar"],
        sc=payload["sc"],
        sc_empty_pair_set=payload["sc_empty_pair_set"],
        excluded_instances=tuple(
            AttackInstance(p["family"], p["epsilon"])
            for p in payload["excluded_instances"]
        ),
    )


def write_reports(reports: Sequence[MetricReport], alpha: float, path: str):
    payload = {
        "schema_version": SCHEMA_VERSION,
        "alpha": alpha,
        "reports": [report_to_json(r) for r in reports],
    }
    _validate(payload, REPORTS_SCHEMA, "reports (outgoing)")
    _dump(payload, path)


def read_reports(path: str) -> tuple[list[MetricReport], float]:
    payload = _load(path)
    _validate(payload, REPORTS_SCHEMA, os.path.basename(path))
    _check_version(payload, os.path.basename(path))
    return [report_from_json(r) for r in payload["reports"]], float(payload["alpha"])


def write_leaderboard(entries: Sequence[RankedEntry], metric: str, path: str):
    payload = {
        "schema_version": SCHEMA_VERSION,
        "metric": metric,
        "entries": [
            {
                "rank": e.rank,
                "model_id": e.model_id,
                "value": e.value,
                "clean_accuracy": e.clean_accuracy,
            }
            for e in entries
        ],
    }
    _validate(payload, LEADERBOARD_SCHEMA, "leaderboard (outgoing)")
    _dump(payload, path)


def read_leaderboard(path: str) -> tuple[str, list[RankedEntry]]:
    payload = _load(path)
    _validate(payload, LEADERBOARD_SCHEMA, os.path.basename(path))
    _check_version(payload, os.path.basename(path))
    entries = [
        RankedEntry(e["rank"], e["model_id"], e["value"], e["clean_accuracy"])
        for e in payload["entries"]
    ]
    return payload["metric"], entries


# ---------------------------------------------------------------------------
# Model checkpoints

MODEL_CHECKPOINT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "weights", "provenance"],
    "properties": {
        "schema_version": {"type": "integer", "minimum": 1},
        "weights": {
            "type": "object",
            "required": ["w1", "b1"],
            "properties": {
                "w1": {"type": "array"},
                "b1": {"type": "array"},
                "w2": {"type": ["array", "null"]},
                "b2": {"type": ["array", "null"]},
            },
        },
        "provenance": {"type": "object"},
    },
}


def write_model(model, path: str):
    """Serialize a sandbox model checkpoint with its training provenance."""
    payload = {
        "schema_version": SCHEMA_VERSION,
        "weights": {
            "w1": model.w1.tolist(),
            "b1": model.b1.tolist(),
            "w2": None if model.w2 is None else model.w2.tolist(),
            "b2": None if model.b2 is None else model.b2.tolist(),
        },
        "provenance": dict(model.provenance),
    }
    _validate(payload, MODEL_CHECKPOINT_SCHEMA, "model checkpoint (outgoing)")
    _dump(payload, path)


def read_model(path: str):
    import numpy as np

    from .sandbox.model import SandboxModel

    payload = _load(path)
    _validate(payload, MODEL_CHECKPOINT_SCHEMA, os.path.basename(path))
    _check_version(payload, os.path.basename(path))
    w = payload["weights"]
    return SandboxModel(
        w1=np.array(w["w1"], dtype=np.float64),
        b1=np.array(w["b1"], dtype=np.float64),
        w2=None if w.get("w2") is None else np.array(w["w2"], dtype=np.float64),
        b2=None if w.get("b2") is None else np.array(w["b2"], dtype=np.float64),
        provenance=payload["provenance"],
    )


# ---------------------------------------------------------------------------
# Visualization datasets


def build_visualization(
    bundle: RecordBundle,
    baselines: BaselineTable,
    report: MetricReport,
    families: Sequence[AttackFamily],
    model_id: str,
) -> dict:
    """The four per-model performance datasets: defense-vs-baseline scatter,
    per-family accuracy curves, in/out-of-knowledge competitiveness, and
    per-family competitiveness bars."""
    matrix = bundle.matrix_for(model_id)
    entry = bundle.model(model_id)
    attack_set = bundle.evaluated_set(model_id)
    knowledge = entry.knowledge_set(families)
    scatter = [
        {
            "family": p.family,
            "epsilon": p.epsilon,
            "defense_accuracy": matrix.cells[p],
            "baseline_accuracy": baselines.acc_star(p),
        }
        for p in attack_set
    ]
    curves: dict[str, list] = {}
    for fam in sorted({p.family for p in attack_set if not p.is_clean}):
        points = [{"epsilon": 0.0, "accuracy": matrix.clean_accuracy}] if CLEAN in matrix.cells else []
        points += [
            {"epsilon": p.epsilon, "accuracy": matrix.cells[p]}
            for p in sorted(
                (q for q in attack_set if q.family == fam), key=lambda q: q.epsilon
            )
        ]
        curves[fam] = points
    in_out: CRInOut = cr_in_out(matrix, attack_set, knowledge, baselines)
    return {
        "schema_version": SCHEMA_VERSION,
        "model_id": model_id,
        "scatter": scatter,
        "curves": curves,
        "cr_in_out": {"cr_in": in_out.cr_in, "cr_out": in_out.cr_out},
        "single_cr": {
            fam: {"avg": s.avg, "worst": s.worst} for fam, s in report.single_cr.items()
        },
    }


def build_comparison(
    bundle: RecordBundle,
    baselines: BaselineTable,
    reports: Mapping[str, MetricReport],
    families: Sequence[AttackFamily],
    model_ids: Sequence[str],
) -> dict:
    """Overlayed visualization datasets for a handful of models."""
    if len(model_ids) > MAX_COMPARE_MODELS:
        raise ConfigurationError(
            f"at most {MAX_COMPARE_MODELS} models may be compared, got {len(model_ids)}"
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "models": list(model_ids),
        "datasets": {
            mid: build_visualization(bundle, baselines, reports[mid], families, mid)
            for mid in model_ids
        },
    }


def write_visualization(payload: dict, path: str):
    _validate(payload, VIZ_SCHEMA, "visualization (outgoing)")
    _dump(payload, path)


def export_bundle(
    bundle: RecordBundle,
    baselines: BaselineTable,
    reports: Sequence[MetricReport],
    families: Sequence[AttackFamily],
    out_dir: str,
    alpha: float,
) -> list[str]:
    """Write the whole self-contained leaderboard directory at once: records,
    baselines, reports, both rankings, and per-model visualization datasets.
    Returns the relative paths written."""
    from .metrics import rank_leaderboard

    written = []

    def emit(writer, *args, rel: str):
        writer(*args, os.path.join(out_dir, rel))
        written.append(rel)

    emit(write_bundle, bundle, rel="bundle.json")
    emit(write_baselines, baselines, rel="baselines.json")
    emit(write_reports, reports, alpha, rel="reports.json")
    emit(write_leaderboard, rank_leaderboard(reports, "cr_ind_avg"), "cr_ind_avg", rel="leaderboard_avg.json")
    emit(write_leaderboard, rank_leaderboard(reports, "cr_ind_worst"), "cr_ind_worst", rel="leaderboard_worst.json")
    by_id = {r.model_id: r for r in reports}
    for model_id in bundle.model_ids():
        payload = build_visualization(bundle, baselines, by_id[model_id], families, model_id)
        emit(write_visualization, payload, rel=os.path.join("viz", f"{model_id}.json"))
    return written
