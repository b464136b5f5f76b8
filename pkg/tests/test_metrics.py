import math

import pytest

import oracles
from multiatk.metrics import (
    BaselineCell,
    BaselineTable,
    EvaluationMatrix,
    IncompleteEvaluationError,
    MetricReport,
    MetricUndefinedError,
    attack_strength,
    average_accuracy,
    cr_exp,
    cr_general,
    cr_in_out,
    cr_ind_avg,
    cr_ind_worst,
    cr_max,
    muar,
    multi_error,
    rank_leaderboard,
    single_cr,
    stability_constant,
    uar,
    union_accuracy,
)
from multiatk.threat import CLEAN, AttackInstance, AttackSet, KnowledgeSet

from conftest import random_evaluation


def table(cells: dict) -> BaselineTable:
    return BaselineTable(
        {inst: BaselineCell((v,), v) for inst, v in cells.items()}, num_classes=3
    )


def matrix(cells: dict, model_id="m") -> EvaluationMatrix:
    return EvaluationMatrix(model_id, cells)


X1, X2, X3 = (AttackInstance("linf", e) for e in (0.1, 0.2, 0.3))
Y1, Y2 = (AttackInstance("l2", e) for e in (0.5, 1.0))


class TestMultiError:
    def setup_method(self):
        self.m = matrix({CLEAN: 0.9, X1: 0.8, X2: 0.6})
        self.k = AttackSet((X1, X2))

    def test_expected_error(self):
        assert multi_error(self.m, self.k, "exp") == pytest.approx(0.3)

    def test_max_error_of_perfect_model_is_zero(self):
        m = matrix({CLEAN: 1.0, X1: 1.0, X2: 1.0})
        assert multi_error(m, self.k, "max") == 0.0

    def test_ind_vector_in_iteration_order(self):
        assert multi_error(self.m, self.k, "ind") == pytest.approx((0.2, 0.4))

    def test_missing_cell_names_instance(self):
        with pytest.raises(IncompleteEvaluationError, match="linf@0.3"):
            multi_error(self.m, AttackSet((X1, X3)), "exp")


class TestCRGeneral:
    def test_half(self):
        assert cr_general(0.45, 0.90) == pytest.approx(50.0)

    def test_self_competitive(self, rng):
        for _ in range(20):
            x = float(rng.uniform(0.01, 1.0))
            assert cr_general(x, x) == pytest.approx(100.0)

    def test_zero_accuracy(self):
        assert cr_general(0.0, 0.5) == 0.0

    def test_zero_denominator(self):
        with pytest.raises(MetricUndefinedError):
            cr_general(0.3, 0.0)


ACC3 = {X1: 0.5, X2: 0.4, X3: 0.3}
STAR3 = {X1: 0.8, X2: 0.5, X3: 0.6}
M3 = matrix({CLEAN: 0.9, **ACC3})
T3 = table({CLEAN: 0.95, **STAR3})
K3 = AttackSet((X1, X2, X3))


class TestCRVariants:
    def test_ind_avg_worked_example(self):
        # ratios 0.625, 0.8, 0.5 -> mean 64.1666...
        assert cr_ind_avg(M3, K3, T3).value == pytest.approx(
            100 * (0.5 / 0.8 + 0.4 / 0.5 + 0.3 / 0.6) / 3, rel=1e-12
        )
        assert cr_ind_avg(M3, K3, T3).value == pytest.approx(64.1667, abs=5e-5)

    def test_ind_avg_self_is_100(self):
        m = matrix({CLEAN: 0.95, **STAR3})
        assert cr_ind_avg(m, K3, T3).value == pytest.approx(100.0)

    def test_ind_worst_worked_example(self):
        assert cr_ind_worst(M3, K3, T3).value == pytest.approx(50.0)

    def test_ind_worst_zero_cell(self):
        m = matrix({CLEAN: 0.9, X1: 0.0, X2: 0.4, X3: 0.3})
        assert cr_ind_worst(m, K3, T3).value == 0.0

    def test_exp_worked_example(self):
        assert cr_exp(M3, K3, T3) == pytest.approx(100 * 1.2 / 1.9, rel=1e-12)

    def test_exp_single_instance_equals_ind_avg(self):
        k1 = AttackSet((X2,))
        assert cr_exp(M3, k1, T3) == pytest.approx(cr_ind_avg(M3, k1, T3).value)

    def test_max_worked_example(self):
        assert cr_max(M3, K3, T3) == pytest.approx(100 * 0.3 / 0.5, rel=1e-12)

    def test_max_minima_at_different_instances(self):
        m = matrix({CLEAN: 0.9, X1: 0.2, X2: 0.9})
        t = table({CLEAN: 0.95, X1: 0.9, X2: 0.2})
        k = AttackSet((X1, X2))
        assert cr_max(m, k, t) == pytest.approx(100.0)
        assert cr_max(m, k, t) >= cr_ind_worst(m, k, t).value

    def test_degenerate_cells_excluded_and_reported(self):
        t = table({CLEAN: 0.95, X1: 0.8, X2: 0.0, X3: 0.6})
        result = cr_ind_avg(M3, K3, t)
        assert result.excluded == (X2,)
        assert result.value == pytest.approx(100 * (0.5 / 0.8 + 0.3 / 0.6) / 2)

    def test_all_degenerate_is_undefined(self):
        t = table({CLEAN: 0.95, X1: 0.0, X2: 0.0, X3: 0.0})
        with pytest.raises(MetricUndefinedError):
            cr_ind_avg(M3, K3, t)


class TestSingleCR:
    def test_restriction_to_family_plus_clean(self):
        m = matrix({CLEAN: 0.9, X1: 0.5, Y1: 0.4})
        t = table({CLEAN: 0.9, X1: 0.8, Y1: 0.5})
        s = single_cr(m, "linf", t)
        assert s.avg == pytest.approx(100 * (0.9 / 0.9 + 0.5 / 0.8) / 2)
        assert s.worst == pytest.approx(100 * 0.5 / 0.8)

    def test_self_competitive_family(self):
        m = matrix({CLEAN: 0.95, X1: 0.8, X2: 0.5})
        t = table({CLEAN: 0.95, X1: 0.8, X2: 0.5})
        s = single_cr(m, "linf", t)
        assert s.avg == pytest.approx(100.0) and s.worst == pytest.approx(100.0)


class TestUAR:
    def test_worked_example(self):
        m = matrix({CLEAN: 0.9, X1: 0.6, X2: 0.4})
        t = table({CLEAN: 0.9, X1: 0.8, X2: 0.5})
        assert uar(m, "linf", t) == pytest.approx(100 * 1.0 / 1.3, rel=1e-12)

    def test_self_is_100(self):
        m = matrix({CLEAN: 0.9, X1: 0.8, X2: 0.5})
        t = table({CLEAN: 0.9, X1: 0.8, X2: 0.5})
        assert uar(m, "linf", t) == pytest.approx(100.0)

    def test_muar_is_mean_over_families(self):
        m = matrix({CLEAN: 0.9, X1: 0.8, Y1: 0.3})
        t = table({CLEAN: 0.9, X1: 1.0, Y1: 0.5})
        assert muar(m, ["linf", "l2"], t) == pytest.approx((80.0 + 60.0) / 2)

    def test_uar_equals_cr_exp_on_family_grid(self):
        # uniform weights over one family's instances, no clean entry
        m = matrix({CLEAN: 0.9, X1: 0.61, X2: 0.37})
        t = table({CLEAN: 0.9, X1: 0.83, X2: 0.52})
        k = AttackSet((X1, X2))
        assert uar(m, "linf", t) == pytest.approx(cr_exp(m, k, t), rel=1e-12)


class TestUnionAccuracy:
    def test_worked_example(self):
        profiles = {"A": (0.05, math.inf), "B": (0.02, math.inf)}
        assert union_accuracy(profiles, {"A": 0.03, "B": 0.03}) == pytest.approx(0.5)

    def test_levels_zero_gives_clean_accuracy(self):
        # clean-misclassified images carry threshold 0 in every family
        profiles = {"A": (0.0, 0.1, math.inf), "B": (0.0, math.inf, 0.2)}
        assert union_accuracy(profiles, {"A": 0.0, "B": 0.0}) == pytest.approx(2 / 3)

    def test_single_family_equals_curve_value(self):
        profiles = {"A": (0.02, 0.05, math.inf)}
        assert union_accuracy(profiles, {"A": 0.03}) == pytest.approx(2 / 3)

    def test_missing_family(self):
        with pytest.raises(IncompleteEvaluationError):
            union_accuracy({"A": (0.1,)}, {"B": 0.05})

    def test_upper_bounded_by_per_family_accuracy(self, rng):
        for _ in range(30):
            n = int(rng.integers(3, 30))
            profiles = {
                fam: tuple(
                    float(rng.choice([0.0, 0.1, 0.2, 0.5, math.inf])) for _ in range(n)
                )
                for fam in ("A", "B")
            }
            levels = {fam: float(rng.choice([0.05, 0.15, 0.3])) for fam in ("A", "B")}
            u = union_accuracy(profiles, levels)
            for fam in ("A", "B"):
                single = union_accuracy({fam: profiles[fam]}, {fam: levels[fam]})
                assert u <= single + 1e-12


class TestAverageAccuracy:
    def test_uniform_mean(self):
        assert average_accuracy(M3, K3) == pytest.approx(0.4)

    def test_constant(self):
        m = matrix({CLEAN: 0.7, X1: 0.7, X2: 0.7})
        assert average_accuracy(m, AttackSet((X1, X2))) == pytest.approx(0.7)

    def test_point_mass(self):
        k = AttackSet((X1, X2, X3), (1.0, 0.0, 0.0))
        assert average_accuracy(M3, k) == pytest.approx(0.5)


class TestAttackStrength:
    def test_complement_of_baseline(self):
        t = table({CLEAN: 0.97, X1: 0.92})
        assert attack_strength(X1, t) == pytest.approx(0.08)
        assert attack_strength(CLEAN, t) == pytest.approx(0.03)

    def test_perfect_baseline(self):
        t = table({CLEAN: 1.0, X1: 1.0})
        assert attack_strength(X1, t) == 0.0

    def test_chance_level(self):
        t = table({CLEAN: 0.9, X1: 1 / 3})
        assert attack_strength(X1, t) == pytest.approx(1 - 1 / 3)


class TestStabilityConstant:
    def test_worked_example(self):
        # strengths 0.05 / 0.10 / 0.12; only the last pair is within alpha
        t = table({CLEAN: 0.95, Y1: 0.90, Y2: 0.88})
        m = matrix({CLEAN: 0.90, Y1: 0.60, Y2: 0.50})
        k = AttackSet((CLEAN, Y1, Y2))
        ks = KnowledgeSet(frozenset({CLEAN, Y1}))
        result = stability_constant(m, k, ks, t, alpha=0.03)
        assert result.value == pytest.approx(5.0, rel=1e-12)
        assert not result.empty_pair_set

    def test_constant_accuracy_gives_zero(self):
        t = table({CLEAN: 0.95, Y1: 0.93, Y2: 0.91})
        m = matrix({CLEAN: 0.8, Y1: 0.8, Y2: 0.8})
        k = AttackSet((CLEAN, Y1, Y2))
        result = stability_constant(m, k, KnowledgeSet(frozenset(k)), t, 0.05)
        assert result.value == 0.0 and not result.empty_pair_set

    def test_empty_pair_set_flag(self):
        t = table({CLEAN: 0.95, Y1: 0.5})  # gap 0.45 >> alpha
        m = matrix({CLEAN: 0.9, Y1: 0.2})
        k = AttackSet((CLEAN, Y1))
        result = stability_constant(m, k, KnowledgeSet(frozenset({CLEAN})), t, 0.03)
        assert result == (0.0, True)

    def test_equal_strength_pairs_skipped(self):
        t = table({CLEAN: 0.95, Y1: 0.9, Y2: 0.9})
        m = matrix({CLEAN: 0.9, Y1: 0.7, Y2: 0.1})
        k = AttackSet((Y1, Y2))
        result = stability_constant(m, k, KnowledgeSet(frozenset({Y1})), t, 0.03)
        assert result == (0.0, True)

    def test_nondecreasing_in_alpha_and_symmetric(self, rng):
        for _ in range(20):
            _, attack_set, baselines, mirror = random_evaluation(rng, 8)
            m = matrix(
                {p: mirror["acc"][(p.family, p.epsilon)] for p in attack_set}
                | {CLEAN: 0.9}
            )
            ks = KnowledgeSet(frozenset(list(attack_set)[:3]))
            prev = 0.0
            for alpha in (0.02, 0.05, 0.1, 0.3, 1.0):
                value = stability_constant(m, attack_set, ks, baselines, alpha).value
                assert value >= prev - 1e-15
                prev = value


class TestCRInOut:
    def test_full_knowledge_leaves_out_undefined(self):
        ks = KnowledgeSet(frozenset(K3) | {CLEAN})
        k = AttackSet((CLEAN, X1, X2, X3))
        m = matrix({CLEAN: 0.9, **ACC3})
        result = cr_in_out(m, k, ks, T3)
        assert result.cr_out is None
        assert result.cr_in == pytest.approx(cr_ind_avg(m, k, T3).value)

    def test_partition_means(self):
        m = matrix({CLEAN: 0.9, X1: 0.8, X2: 0.25, X3: 0.18})
        t = table({CLEAN: 0.95, X1: 0.8, X2: 0.5, X3: 0.6})
        k = AttackSet((X1, X2, X3))
        ks = KnowledgeSet(frozenset({X1}))
        result = cr_in_out(m, k, ks, t)
        assert result.cr_in == pytest.approx(100.0)
        assert result.cr_out == pytest.approx(100 * (0.5 + 0.3) / 2)

    def test_standard_defense_clean_ratio(self):
        m = matrix({CLEAN: 0.855, X1: 0.1})
        t = table({CLEAN: 0.95, X1: 0.8})
        k = AttackSet((CLEAN, X1))
        result = cr_in_out(m, k, KnowledgeSet(frozenset()), t)
        assert result.cr_in == pytest.approx(100 * 0.855 / 0.95)


def _report(model_id, avg, worst, clean):
    return MetricReport(
        model_id=model_id,
        clean_accuracy=clean,
        cr_ind_avg=avg,
        cr_ind_worst=worst,
        cr_exp=None,
        cr_max=None,
        single_cr={},
        muar=None,
        sc=0.0,
        sc_empty_pair_set=True,
        excluded_instances=(),
    )


class TestRanking:
    def test_sort_order(self):
        reports = [
            _report("a", 60.0, 5.0, 0.9),
            _report("b", 70.0, 4.0, 0.9),
            _report("c", 65.0, 6.0, 0.9),
        ]
        ranked = rank_leaderboard(reports, "cr_ind_avg")
        assert [e.model_id for e in ranked] == ["b", "c", "a"]
        assert [e.rank for e in ranked] == [1, 2, 3]

    def test_single_report(self):
        ranked = rank_leaderboard([_report("only", 10.0, 1.0, 0.5)])
        assert ranked[0].rank == 1

    def test_tie_breaks_clean_then_id(self):
        reports = [
            _report("b", 50.0, 1.0, 0.8),
            _report("a", 50.0, 1.0, 0.8),
            _report("c", 50.0, 1.0, 0.95),
        ]
        ranked = rank_leaderboard(reports, "cr_ind_avg")
        assert [e.model_id for e in ranked] == ["c", "a", "b"]

    def test_rank_order_invariant_to_common_scaling(self, rng):
        for _ in range(10):
            reports = [
                _report(f"m{i}", float(rng.uniform(10, 90)), 1.0, float(rng.uniform(0.5, 1)))
                for i in range(6)
            ]
            c = float(rng.uniform(0.1, 1.0))
            scaled = [
                _report(r.model_id, r.cr_ind_avg * c, r.cr_ind_worst * c, r.clean_accuracy)
                for r in reports
            ]
            base = [e.model_id for e in rank_leaderboard(reports)]
            after = [e.model_id for e in rank_leaderboard(scaled)]
            assert base == after


class TestInvariantChain:
    def test_worst_le_avg_le_max_ratio(self, rng):
        for _ in range(50):
            m, k, t, mirror = random_evaluation(rng)
            try:
                avg = cr_ind_avg(m, k, t)
                worst = cr_ind_worst(m, k, t)
            except MetricUndefinedError:
                continue
            ratios = [
                100 * mirror["acc"][key] / mirror["acc_star"][key]
                for key in mirror["keys"]
                if mirror["acc_star"][key] >= 1e-6
            ]
            assert worst.value <= avg.value + 1e-9
            assert avg.value <= max(ratios) + 1e-9

    def test_equal_when_singleton(self, rng):
        for _ in range(20):
            acc = float(rng.uniform(0, 1))
            star = float(rng.uniform(0.1, 1))
            m = matrix({CLEAN: 0.9, X1: acc})
            t = table({CLEAN: 0.9, X1: star})
            k = AttackSet((X1,))
            expected = cr_general(acc, star)
            assert cr_ind_avg(m, k, t).value == pytest.approx(expected, rel=1e-12)
            assert cr_ind_worst(m, k, t).value == pytest.approx(expected, rel=1e-12)
            assert cr_exp(m, k, t) == pytest.approx(expected, rel=1e-12)
            assert cr_max(m, k, t) == pytest.approx(expected, rel=1e-12)

    def test_cr_max_ge_cr_ind_worst(self, rng):
        for _ in range(50):
            m, k, t, _ = random_evaluation(rng)
            try:
                assert cr_max(m, k, t) >= cr_ind_worst(m, k, t).value - 1e-9
            except MetricUndefinedError:
                continue

    def test_point_mass_equals_cr_general(self, rng):
        for _ in range(20):
            m, k, t, mirror = random_evaluation(rng, 6)
            instances = list(k)
            pick = int(rng.integers(0, len(instances)))
            target = instances[pick]
            if t.acc_star(target) < 1e-6:
                continue
            weights = tuple(1.0 if i == pick else 0.0 for i in range(len(instances)))
            k_point = AttackSet(tuple(instances), weights)
            expected = cr_general(m.accuracy(target), t.acc_star(target))
            assert cr_ind_avg(m, k_point, t).value == pytest.approx(expected, rel=1e-12)

    def test_scaling_accuracies_scales_all_cr(self, rng):
        for _ in range(20):
            m, k, t, _ = random_evaluation(rng, 8)
            c = float(rng.uniform(0.1, 1.0))
            scaled = matrix({p: a * c for p, a in m.cells.items()})
            try:
                assert cr_ind_avg(scaled, k, t).value == pytest.approx(
                    c * cr_ind_avg(m, k, t).value, rel=1e-12
                )
                assert cr_ind_worst(scaled, k, t).value == pytest.approx(
                    c * cr_ind_worst(m, k, t).value, rel=1e-12
                )
                assert cr_exp(scaled, k, t) == pytest.approx(
                    c * cr_exp(m, k, t), rel=1e-12
                )
                assert cr_max(scaled, k, t) == pytest.approx(
                    c * cr_max(m, k, t), rel=1e-12
                )
            except MetricUndefinedError:
                continue


class TestOracleEquivalence:
    """Every metric agrees with the independently coded brute-force loops."""

    def test_random_matrices(self, rng):
        for _ in range(100):
            m, k, t, mirror = random_evaluation(rng)
            keys, acc, star, w = (
                mirror["keys"],
                mirror["acc"],
                mirror["acc_star"],
                mirror["weights"],
            )
            try:
                expect = oracles.cr_ind_avg(acc, star, w, keys)
                assert cr_ind_avg(m, k, t).value == pytest.approx(expect, rel=1e-12)
            except ZeroDivisionError:
                pass
            try:
                expect = oracles.cr_ind_worst(acc, star, w, keys)
                assert cr_ind_worst(m, k, t).value == pytest.approx(expect, rel=1e-12)
            except ZeroDivisionError:
                pass
            assert cr_exp(m, k, t) == pytest.approx(
                oracles.cr_exp(acc, star, w, keys), rel=1e-12
            )
            try:
                expect = oracles.cr_max(acc, star, w, keys)
                assert cr_max(m, k, t) == pytest.approx(expect, rel=1e-12)
            except ZeroDivisionError:
                pass
            assert average_accuracy(m, k) == pytest.approx(
                oracles.average_accuracy(acc, w, keys), rel=1e-12
            )
