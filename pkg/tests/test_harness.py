import math

import numpy as np
import pytest

from multiatk.harness import (
    EvalSession,
    accuracy_curve,
    build_baseline_table,
    evaluate_model,
    measure_robust_accuracy,
    minimal_epsilon_search,
)
from multiatk.sandbox.data import DatasetConfig, make_dataset
from multiatk.sandbox.model import SandboxModel, predict
from multiatk.sandbox.train import DefenseSpec, TrainConfig, train
from multiatk.threat import CLEAN, AttackFamily, AttackInstance


def margin_model(w, b=0.0):
    w = np.asarray(w, dtype=np.float64)
    return SandboxModel(
        w1=np.stack([w / 2, -w / 2]), b1=np.array([b / 2, -b / 2])
    )


GRID10 = AttackFamily("linf", tuple(round(0.01 * i, 10) for i in range(1, 11)))


@pytest.fixture(scope="module")
def setup():
    ds = make_dataset(DatasetConfig(n_train=400, n_test=40, seed=13))
    families = [
        AttackFamily("linf", (0.04, 0.08, 0.12, 0.16, 0.20)),
        AttackFamily("l2", (0.2, 0.4, 0.6, 0.8, 1.0)),
        AttackFamily("brightness", (0.1, 0.2, 0.3, 0.4, 0.5)),
        AttackFamily("translate", (0.3, 0.6, 0.9, 1.2, 1.5)),
    ]
    model = train(ds, DefenseSpec.standard(), families, TrainConfig(epochs=50), seed=2)
    return ds, families, model


class TestMinimalEpsilonSearch:
    def test_known_linear_threshold(self):
        # margin 0.68 against l-inf steps on w=[10,10]: flips first at 0.04
        model = margin_model([10.0, 10.0], b=-9.32)
        x = np.array([0.5, 0.5])
        found = minimal_epsilon_search(model, x, 0, GRID10)
        assert found == pytest.approx(0.04)
        scan = minimal_epsilon_search(model, x, 0, GRID10, exhaustive=True)
        assert scan == found

    def test_clean_misclassification_gives_zero(self):
        model = margin_model([1.0, 1.0])
        x = np.array([0.5, 0.5])  # positive margin, but label says class 1
        assert minimal_epsilon_search(model, x, 1, GRID10) == 0.0

    def test_never_succeeding_gives_infinity(self):
        model = margin_model([10.0, 10.0], b=-5.0)  # margin 5, way beyond grid
        x = np.array([0.5, 0.5])
        assert math.isinf(minimal_epsilon_search(model, x, 0, GRID10))

    def test_probe_budget_logarithmic(self, setup):
        ds, families, model = setup
        for fam in families:
            n = len(fam.grid)
            bound = math.ceil(math.log2(n)) + 1
            for i in range(12):
                session = EvalSession(model, ds.test_x[i], int(ds.test_y[i]), fam)
                minimal_epsilon_search(
                    model, ds.test_x[i], int(ds.test_y[i]), fam, session=session
                )
                assert session.executions <= bound

    def test_bisection_equals_linear_scan(self, setup):
        ds, families, model = setup
        for fam in families:
            for i in range(20):
                x, y = ds.test_x[i], int(ds.test_y[i])
                fast = minimal_epsilon_search(model, x, y, fam)
                slow = minimal_epsilon_search(model, x, y, fam, exhaustive=True)
                assert fast == slow, (fam.id, i)


class TestAccuracyCurve:
    def test_counting_example(self):
        fam = AttackFamily("linf", (0.03, 0.06))
        curve = accuracy_curve([0.02, 0.05, math.inf], fam)
        assert curve[0.03] == pytest.approx(2 / 3)
        assert curve[0.06] == pytest.approx(1 / 3)

    def test_all_infinite_profile_is_flat_clean(self):
        fam = AttackFamily("linf", (0.03, 0.06))
        curve = accuracy_curve([math.inf] * 4, fam)
        assert set(curve.values()) == {1.0}

    def test_all_zero_profile_is_zero(self):
        fam = AttackFamily("linf", (0.03, 0.06))
        curve = accuracy_curve([0.0] * 4, fam)
        assert set(curve.values()) == {0.0}

    def test_clean_point_counts_positive_thresholds(self):
        fam = AttackFamily("linf", (0.5,))
        curve = accuracy_curve([0.0, 0.2, math.inf], fam)
        assert curve[0.0] == pytest.approx(2 / 3)


class TestEvaluateModel:
    def test_binary_search_equals_exhaustive(self, setup):
        ds, families, model = setup
        fast = evaluate_model(model, families, ds.test_x, ds.test_y)
        slow = evaluate_model(model, families, ds.test_x, ds.test_y, exhaustive=True)
        assert fast.matrix.cells == slow.matrix.cells
        assert fast.profile.families == slow.profile.families

    def test_curves_non_increasing(self, setup):
        ds, families, model = setup
        outcome = evaluate_model(model, families, ds.test_x, ds.test_y)
        for fam in families:
            accs = [outcome.matrix.cells[CLEAN]] + [
                outcome.matrix.cells[AttackInstance(fam.id, e)] for e in fam.grid
            ]
            assert all(a >= b - 1e-12 for a, b in zip(accs, accs[1:])), fam.id

    def test_clean_cell_matches_direct_measurement(self, setup):
        ds, families, model = setup
        outcome = evaluate_model(model, families[:1], ds.test_x, ds.test_y)
        direct = (predict(model, ds.test_x) == ds.test_y).mean()
        assert outcome.matrix.cells[CLEAN] == pytest.approx(direct)

    def test_empty_family_list_gives_clean_only(self, setup):
        ds, _, model = setup
        outcome = evaluate_model(model, [], ds.test_x, ds.test_y)
        assert set(outcome.matrix.cells) == {CLEAN}

    def test_deterministic_and_thread_order_independent(self, setup):
        ds, families, model = setup
        a = evaluate_model(model, families[:2], ds.test_x[:16], ds.test_y[:16])
        b = evaluate_model(model, families[:2], ds.test_x[:16], ds.test_y[:16])
        c = evaluate_model(model, families[:2], ds.test_x[:16], ds.test_y[:16], jobs=4)
        assert a.matrix.cells == b.matrix.cells == c.matrix.cells
        assert a.profile.families == c.profile.families

    def test_n_samples_recorded(self, setup):
        ds, families, model = setup
        outcome = evaluate_model(model, families[:1], ds.test_x, ds.test_y)
        assert all(n == len(ds.test_y) for n in outcome.matrix.n_samples.values())


@pytest.fixture(scope="module")
def table_setup():
    ds = make_dataset(DatasetConfig(n_train=400, n_test=60, seed=17))
    families = [
        AttackFamily("linf", (0.05, 0.1)),
        AttackFamily("l2", (0.3, 0.6)),
    ]
    cfg = TrainConfig(epochs=40)
    table = build_baseline_table(families, (1, 2), ds, cfg)
    return ds, families, cfg, table


class TestBaselineTable:
    def test_cells_cover_grid_plus_clean(self, table_setup):
        _, families, _, table = table_setup
        expected = {CLEAN} | {
            AttackInstance(f.id, e) for f in families for e in f.grid
        }
        assert set(table.cells) == expected

    def test_acc_star_is_seed_mean(self, table_setup):
        _, _, _, table = table_setup
        for cell in table.cells.values():
            assert cell.acc_star == pytest.approx(
                sum(cell.per_seed) / len(cell.per_seed)
            )
            assert len(cell.per_seed) == 2

    def test_regeneration_identical(self, table_setup):
        ds, families, cfg, table = table_setup
        again = build_baseline_table(families, (1, 2), ds, cfg)
        assert again.cells == table.cells

    def test_baseline_not_below_standard_model(self, table_setup):
        # direct training on an attack should not do (much) worse than a
        # model that never saw it
        ds, families, cfg, table = table_setup
        std = train(ds, DefenseSpec.standard(), families, cfg, seed=1)
        for fam in families:
            inst = AttackInstance(fam.id, fam.grid[0])
            std_acc = measure_robust_accuracy(
                std, inst, fam, ds.test_x, ds.test_y
            )
            assert table.cells[inst].acc_star >= std_acc - 0.02

    def test_replay_of_baseline_model_close_to_cell(self, table_setup):
        ds, families, cfg, table = table_setup
        fam = families[0]
        inst = AttackInstance(fam.id, fam.grid[1])
        model = train(ds, DefenseSpec.at(fam.id, inst.epsilon), families, cfg, seed=1)
        outcome = evaluate_model(model, [fam], ds.test_x, ds.test_y)
        direct = measure_robust_accuracy(model, inst, fam, ds.test_x, ds.test_y)
        # the graded evaluation warm-starts from smaller radii, so it can only
        # be stronger than the single-instance replay
        assert outcome.matrix.cells[inst] <= direct + 1e-12
        assert outcome.matrix.cells[inst] == pytest.approx(direct, abs=0.08)
