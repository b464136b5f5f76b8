"""Read-only HTTP facade over a leaderboard bundle.

The server loads one bundle directory at startup and never mutates it.
Official rankings are always computed over each model's full evaluated
attack set; ``POST /api/metrics`` recomputes reports for a user-chosen
restriction of that set, delegating every formula to the metrics engine so
the UI stays a pure renderer.
"""

from __future__ import annotations

import os
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import store
from .config import load_config
from .metrics import (
    DEFAULT_ALPHA,
    MetricError,
    compute_report,
    rank_leaderboard,
)
from .store import report_to_json
from .threat import AttackSet, ConfigurationError

UI_ENV = "MULTIATK_UI_DIR"


class AttackFilter(BaseModel):
    """User-chosen restriction of the attack set."""

    families: Optional[list[str]] = None  # default: every registered family
    epsilon_ranges: dict[str, tuple[float, float]] = Field(default_factory=dict)
    include_clean: bool = True


class MetricsRequest(BaseModel):
    model_ids: list[str]
    attack_filter: AttackFilter = Field(default_factory=AttackFilter)
    alpha: float = DEFAULT_ALPHA


class BundleState:
    """Everything the endpoints read, loaded once."""

    def __init__(self, bundle_dir: str):
        self.bundle_dir = bundle_dir
        config_path = os.path.join(bundle_dir, "config.json")
        self.config = load_config(config_path if os.path.exists(config_path) else None)
        self.families = self.config.families
        self.family_ids = [f.id for f in self.families]
        self.bundle = store.import_records(
            os.path.join(bundle_dir, "bundle.json"), self.families
        )
        self.baselines = store.read_baselines(os.path.join(bundle_dir, "baselines.json"))
        reports, self.alpha = store.read_reports(os.path.join(bundle_dir, "reports.json"))
        self.reports = {r.model_id: r for r in reports}
        self.rankings = {
            metric: rank_leaderboard(reports, metric)
            for metric in ("cr_ind_avg", "cr_ind_worst")
        }

    def family(self, family_id: str):
        for fam in self.families:
            if fam.id == family_id:
                return fam
        raise HTTPException(404, f"unknown family {family_id!r}")

    def model_entry(self, model_id: str):
        try:
            return self.bundle.model(model_id)
        except KeyError:
            raise HTTPException(404, f"unknown model {model_id!r}") from None

    def filtered_set(self, model_id: str, flt: AttackFilter) -> AttackSet:
        """The model's evaluated instances restricted by the filter."""
        requested = flt.families if flt.families is not None else self.family_ids
        for fam in requested:
            self.family(fam)
        for fam, (lo, hi) in flt.epsilon_ranges.items():
            grid = self.family(fam).grid
            if lo > hi:
                raise HTTPException(400, f"empty epsilon range for {fam!r}")
            if hi < grid[0] or lo > grid[-1]:
                raise HTTPException(
                    400,
                    f"epsilon range [{lo}, {hi}] for {fam!r} lies outside its "
                    f"grid [{grid[0]}, {grid[-1]}]",
                )
        requested_set = set(requested)
        full = self.bundle.evaluated_set(model_id)
        keep = []
        for inst in full:
            if inst.is_clean:
                if flt.include_clean:
                    keep.append(inst)
                continue
            if inst.family not in requested_set:
                continue
            lo, hi = flt.epsilon_ranges.get(inst.family, (inst.epsilon, inst.epsilon))
            if lo <= inst.epsilon <= hi:
                keep.append(inst)
        if not keep:
            raise HTTPException(400, "attack filter leaves no instances to evaluate")
        try:
            return full.restricted(keep)
        except ConfigurationError as exc:
            raise HTTPException(400, str(exc)) from None


def create_app(bundle_dir: str, ui_dir: Optional[str] = None) -> FastAPI:
    state = BundleState(bundle_dir)
    app = FastAPI(title="multiatk leaderboard", version="1")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/api/models")
    def models():
        return [
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
            for m in state.bundle.models
        ]

    @app.get("/api/attacks")
    def attacks():
        return store.families_to_json(state.families)

    @app.get("/api/leaderboard")
    def leaderboard(metric: str = Query("cr_ind_avg")):
        if metric not in state.rankings:
            raise HTTPException(400, f"unknown ranking metric {metric!r}")
        return {
            "metric": metric,
            "alpha": state.alpha,
            "entries": [
                {
                    "rank": e.rank,
                    "model_id": e.model_id,
                    "value": e.value,
                    "clean_accuracy": e.clean_accuracy,
                    "report": report_to_json(state.reports[e.model_id]),
                }
                for e in state.rankings[metric]
            ],
        }

    @app.post("/api/metrics")
    def metrics(request: MetricsRequest):
        if not request.model_ids:
            raise HTTPException(400, "model_ids must be non-empty")
        if request.alpha <= 0:
            raise HTTPException(400, "alpha must be > 0")
        reports = {}
        for model_id in request.model_ids:
            entry = state.model_entry(model_id)
            attack_set = state.filtered_set(model_id, request.attack_filter)
            matrix = state.bundle.matrix_for(model_id)
            knowledge = entry.knowledge_set(state.families)
            try:
                report = compute_report(
                    matrix, attack_set, state.baselines, knowledge, request.alpha
                )
            except MetricError as exc:
                raise HTTPException(422, str(exc)) from None
            if report.cr_ind_avg is None:
                raise HTTPException(
                    422,
                    detail={
                        "message": "metric undefined after degenerate-cell exclusions",
                        "excluded_instances": [
                            {"family": p.family, "epsilon": p.epsilon}
                            for p in report.excluded_instances
                        ],
                    },
                )
            reports[model_id] = report_to_json(report)
        return {"alpha": request.alpha, "reports": reports}

    @app.get("/api/curves")
    def curves(model: str, family: str):
        state.model_entry(model)
        fam = state.family(family)
        matrix = state.bundle.matrix_for(model)
        points = [{"epsilon": 0.0, "accuracy": matrix.clean_accuracy}]
        for inst in fam.instances():
            if inst in matrix.cells:
                points.append({"epsilon": inst.epsilon, "accuracy": matrix.cells[inst]})
        if len(points) == 1:
            raise HTTPException(404, f"model {model!r} has no records for {family!r}")
        return {"model_id": model, "family": family, "points": points}

    @app.get("/api/viz")
    def viz(models: str):
        ids = [m for m in models.split(",") if m]
        if not ids:
            raise HTTPException(400, "no models requested")
        if len(ids) > store.MAX_COMPARE_MODELS:
            raise HTTPException(
                400, f"at most {store.MAX_COMPARE_MODELS} models may be compared"
            )
        for model_id in ids:
            state.model_entry(model_id)
            if model_id not in state.reports:
                raise HTTPException(404, f"no report for model {model_id!r}")
        payload = store.build_comparison(
            state.bundle, state.baselines, state.reports, state.families, ids
        )
        return payload

    ui = ui_dir or os.environ.get(UI_ENV)
    if ui is None:
        default_ui = os.path.join(
            os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))),
            "frontend",
            "dist",
        )
        if os.path.isdir(default_ui):
            ui = default_ui
    if ui and os.path.isdir(ui):
        app.mount("/", StaticFiles(directory=ui, html=True), name="ui")

    return app
