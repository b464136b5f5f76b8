import json
import math
from pathlib import Path

import numpy as np
import pytest

from multiatk import store
from multiatk.config import load_config
from multiatk.sandbox.model import init_model
from multiatk.threat import CLEAN, AttackInstance

FIXTURE = Path(__file__).parent / "fixtures" / "bundle_small"


@pytest.fixture
def families():
    return load_config(str(FIXTURE / "config.json")).families


class TestBundleRoundTrip:
    def test_import_export_import_is_identity(self, families, tmp_path):
        bundle = store.import_records(str(FIXTURE / "bundle.json"), families)
        out = tmp_path / "bundle.json"
        store.write_bundle(bundle, str(out))
        again = store.import_records(str(out), families)
        assert again.models == bundle.models
        assert again.records == bundle.records
        # a second export is byte-identical
        out2 = tmp_path / "bundle2.json"
        store.write_bundle(again, str(out2))
        assert out.read_bytes() == out2.read_bytes()

    def test_accuracy_out_of_bounds_rejected_with_path(self, tmp_path):
        payload = json.loads((FIXTURE / "bundle.json").read_text())
        payload["records"][2]["accuracy"] = 1.2
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(payload))
        with pytest.raises(store.SchemaError, match=r"/records/2/accuracy"):
            store.import_records(str(bad))

    def test_unknown_family_rejected_with_registry(self, families, tmp_path):
        payload = json.loads((FIXTURE / "bundle.json").read_text())
        payload["records"][1]["family"] = "jpeg"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(payload))
        with pytest.raises(store.SchemaError, match="jpeg"):
            store.import_records(str(bad), families)

    def test_undeclared_model_rejected(self, tmp_path):
        payload = json.loads((FIXTURE / "bundle.json").read_text())
        payload["records"][0]["model_id"] = "ghost"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(payload))
        with pytest.raises(store.SchemaError, match="ghost"):
            store.import_records(str(bad))

    def test_future_schema_version_rejected(self, tmp_path):
        payload = json.loads((FIXTURE / "bundle.json").read_text())
        payload["schema_version"] = 99
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(payload))
        with pytest.raises(store.SchemaError, match="schema_version"):
            store.import_records(str(bad))

    def test_nonmonotone_external_curve_warns_not_rejects(self, tmp_path):
        payload = json.loads((FIXTURE / "bundle.json").read_text())
        for r in payload["records"]:
            if r["model_id"] == "model_a" and r["epsilon"] == 0.3:
                r["accuracy"] = 0.99  # external record, worse-behaved than ours
        f = tmp_path / "ext.json"
        f.write_text(json.dumps(payload))
        with pytest.warns(UserWarning, match="non-monotone"):
            bundle = store.import_records(str(f))
        assert bundle.matrix_for("model_a").cells[AttackInstance("linf", 0.3)] == 0.99


class TestExternalRecords:
    def test_external_family_records_are_scored(self, tmp_path):
        """Accuracy records measured elsewhere (an attack this engine cannot
        execute) still rank, as long as the family is registered with a grid
        and baselines exist for its cells."""
        from multiatk.cli import compute_reports
        from multiatk.threat import AttackFamily

        families = [AttackFamily("external:warp", (0.1, 0.2), {})]
        bundle = store.RecordBundle(
            models=[
                store.ModelEntry("ext_model", "External defense", "at",
                                 (("external:warp", 0.2),))
            ],
            records=[
                store.AccuracyRecord("ext_model", AttackInstance("clean", 0.0), 0.91, 10000),
                store.AccuracyRecord("ext_model", AttackInstance("external:warp", 0.1), 0.60, 10000),
                store.AccuracyRecord("ext_model", AttackInstance("external:warp", 0.2), 0.40, 10000),
            ],
        )
        path = tmp_path / "bundle.json"
        store.write_bundle(bundle, str(path))
        loaded = store.import_records(str(path), families)
        from multiatk.metrics import BaselineCell, BaselineTable

        baselines = BaselineTable(
            {
                AttackInstance("clean", 0.0): BaselineCell.from_seeds([0.95]),
                AttackInstance("external:warp", 0.1): BaselineCell.from_seeds([0.8]),
                AttackInstance("external:warp", 0.2): BaselineCell.from_seeds([0.6]),
            },
            num_classes=10,
        )
        reports = compute_reports(loaded, baselines, families, alpha=0.03)
        assert reports[0].cr_ind_avg == pytest.approx(
            100 * (0.91 / 0.95 + 0.6 / 0.8 + 0.4 / 0.6) / 3, rel=1e-12
        )
        assert "external:warp" in reports[0].single_cr


class TestBaselinesIO:
    def test_round_trip(self, tmp_path):
        table = store.read_baselines(str(FIXTURE / "baselines.json"))
        assert table.acc_star(CLEAN) == 0.95
        out = tmp_path / "b.json"
        store.write_baselines(table, str(out))
        again = store.read_baselines(str(out))
        assert again.cells == table.cells

    def test_acc_star_must_be_seed_mean(self, tmp_path):
        payload = json.loads((FIXTURE / "baselines.json").read_text())
        payload["cells"][1]["acc_star"] = 0.7
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(payload))
        with pytest.raises(Exception, match="mean"):
            store.read_baselines(str(bad))


class TestProfilesIO:
    def test_infinity_round_trips_as_null(self, tmp_path):
        values = {"linf": (0.0, 0.1, math.inf), "l2": (math.inf, 0.5, 0.5)}
        out = tmp_path / "p.json"
        store.write_profile("m", values, 3, str(out))
        raw = json.loads(out.read_text())
        assert raw["families"]["linf"][2] is None
        model_id, families, n = store.read_profile(str(out))
        assert model_id == "m" and n == 3
        assert families == {"linf": (0.0, 0.1, math.inf), "l2": (math.inf, 0.5, 0.5)}


class TestModelCheckpoint:
    def test_round_trip_bitwise(self, tmp_path, rng):
        model = init_model(16, 3, hidden_dim=5, rng=rng)
        model.provenance = {"model_id": "chk", "defense_kind": "standard", "training": []}
        path = tmp_path / "chk.json"
        store.write_model(model, str(path))
        again = store.read_model(str(path))
        for name in model.parameters():
            assert np.array_equal(model.parameters()[name], again.parameters()[name])
        assert again.provenance["model_id"] == "chk"


class TestVisualization:
    @pytest.fixture
    def loaded(self, families):
        bundle = store.import_records(str(FIXTURE / "bundle.json"), families)
        baselines = store.read_baselines(str(FIXTURE / "baselines.json"))
        from multiatk.cli import compute_reports

        reports = {
            r.model_id: r
            for r in compute_reports(bundle, baselines, families, alpha=0.03)
        }
        return bundle, baselines, reports

    def test_scatter_covers_every_instance(self, loaded, families):
        bundle, baselines, reports = loaded
        viz = store.build_visualization(
            bundle, baselines, reports["model_a"], families, "model_a"
        )
        assert len(viz["scatter"]) == len(bundle.evaluated_set("model_a"))

    def test_curve_values_equal_matrix_cells(self, loaded, families):
        bundle, baselines, reports = loaded
        viz = store.build_visualization(
            bundle, baselines, reports["model_a"], families, "model_a"
        )
        matrix = bundle.matrix_for("model_a")
        for point in viz["curves"]["linf"]:
            inst = AttackInstance("linf", point["epsilon"])
            expected = matrix.clean_accuracy if point["epsilon"] == 0 else matrix.cells[inst]
            assert point["accuracy"] == expected

    def test_single_cr_bars_match_engine(self, loaded, families):
        from multiatk.metrics import single_cr

        bundle, baselines, reports = loaded
        viz = store.build_visualization(
            bundle, baselines, reports["model_a"], families, "model_a"
        )
        engine = single_cr(bundle.matrix_for("model_a"), "linf", baselines)
        assert viz["single_cr"]["linf"]["avg"] == pytest.approx(engine.avg, rel=1e-12)
        assert viz["single_cr"]["linf"]["worst"] == pytest.approx(engine.worst, rel=1e-12)

    def test_comparison_limit_five(self, loaded, families):
        bundle, baselines, reports = loaded
        with pytest.raises(Exception, match="at most"):
            store.build_comparison(
                bundle, baselines, reports, families, ["m"] * 6
            )

    def test_every_emitted_file_revalidates(self, tmp_path):
        import shutil

        from multiatk.cli import main

        out = tmp_path / "bundle"
        shutil.copytree(FIXTURE, out)
        config = str(FIXTURE / "config.json")
        assert main(["metrics", "--config", config, "--out", str(out)]) == 0
        assert main(["rank", "--out", str(out)]) == 0
        assert main(["export-viz", "--config", config, "--out", str(out)]) == 0
        import jsonschema

        schema_for = {
            "bundle.json": store.BUNDLE_SCHEMA,
            "baselines.json": store.BASELINES_SCHEMA,
            "reports.json": store.REPORTS_SCHEMA,
            "leaderboard_avg.json": store.LEADERBOARD_SCHEMA,
            "leaderboard_worst.json": store.LEADERBOARD_SCHEMA,
        }
        for name, schema in schema_for.items():
            jsonschema.validate(json.loads((out / name).read_text()), schema)
        for viz_file in (out / "viz").glob("*.json"):
            jsonschema.validate(json.loads(viz_file.read_text()), store.VIZ_SCHEMA)

    def test_export_bundle_writes_self_contained_directory(self, loaded, families, tmp_path):
        bundle, baselines, reports = loaded
        out = tmp_path / "export"
        written = store.export_bundle(
            bundle, baselines, list(reports.values()), families, str(out), alpha=0.03
        )
        assert "bundle.json" in written and "leaderboard_worst.json" in written
        again = store.import_records(str(out / "bundle.json"), families)
        assert again.records == bundle.records
        _, entries = store.read_leaderboard(str(out / "leaderboard_avg.json"))
        assert entries
        assert sorted(p.name for p in (out / "viz").glob("*.json")) == [
            "model_a.json",
            "model_b.json",
            "model_c.json",
        ]

    def test_reexport_byte_identical(self, loaded, families, tmp_path):
        bundle, baselines, reports = loaded
        viz = store.build_visualization(
            bundle, baselines, reports["model_b"], families, "model_b"
        )
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        store.write_visualization(viz, str(a))
        store.write_visualization(
            store.build_visualization(
                bundle, baselines, reports["model_b"], families, "model_b"
            ),
            str(b),
        )
        assert a.read_bytes() == b.read_bytes()
