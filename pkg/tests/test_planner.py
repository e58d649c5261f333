"""Planner: enumeration, budget optimization vs. the reference planner, rule annotations."""

from __future__ import annotations

import pytest

from memplan.errors import CoverageError, DomainError, InfeasibleBudgetError
from memplan.frontier import dominates
from memplan.measurements import MeasurementDataset, MeasurementRecord
from memplan.memory import (
    EvictCache,
    FullCache,
    InferenceConfig,
    QuantCache,
    WeightQuantSpec,
    gib_str,
)
from memplan.planner import (
    ConfigSpace,
    RuleThresholds,
    annotate_rules,
    choose_best,
    cost_points,
    enumerate_configs,
    plan,
    score_dataset,
    score_space,
    space_from_strategy_keys,
)

from conftest import build_synthetic_dataset, reference_plan


@pytest.fixture(scope="module")
def thresholds(models):
    return RuleThresholds.from_catalog(models)


def one_axis_space(models):
    return space_from_strategy_keys(
        models=[models.names()[0]],
        weight_precisions=[8],
        strategy_keys=["full"],
        token_budgets=[2000],
        group_sizes=[1],
    )


class TestEnumerate:
    def test_single_config(self, models):
        assert len(enumerate_configs(one_axis_space(models))) == 1

    def test_product_144(self, models):
        space = space_from_strategy_keys(
            models=models.names(),
            weight_precisions=[4, 8, 16],
            strategy_keys=["full"],
            token_budgets=[2000, 6000, 10000, 14000, 18000, 22000, 26000, 30000],
            group_sizes=[1],
        )
        assert len(enumerate_configs(space)) == 6 * 3 * 1 * 8 * 1 == 144

    def test_documented_manifest_count(self, models):
        # the documented full grid: 6 models x 3 precisions x 7 strategies
        # x 8 budgets x 7 group sizes (docs/config-space.md)
        space = space_from_strategy_keys(
            models=models.names(),
            weight_precisions=[4, 8, 16],
            strategy_keys=[
                "full",
                "evict:8192",
                "evict:4096",
                "evict:2048",
                "quant:8:g64:s16:z0:r128",
                "quant:4:g64:s16:z0:r128",
                "quant:2:g64:s16:z0:r128",
            ],
            token_budgets=[2000, 6000, 10000, 14000, 18000, 22000, 26000, 30000],
            group_sizes=[1, 3, 4, 6, 8, 12, 16],
        )
        assert len(enumerate_configs(space)) == 7056

    def test_deterministic_order(self, models):
        space = space_from_strategy_keys(
            models=["Qwen3-4B", "Qwen3-0.6B"],
            weight_precisions=[16, 4],
            strategy_keys=["quant:4", "full"],
            token_budgets=[6000, 2000],
            group_sizes=[4, 1],
        )
        keys = [c.config_key for c in enumerate_configs(space)]
        assert len(keys) == len(set(keys)) == 32
        # model axis order preserved, the rest canonically sorted
        assert keys[0] == "Qwen3-4B|w4:g128|full|T2000|G1|B1"
        assert keys[-1] == "Qwen3-0.6B|w16:g128|quant:4:g64:s16:z0:r128|T6000|G4|B1"
        assert keys == [c.config_key for c in enumerate_configs(space)]  # reproducible

    def test_empty_axis_rejected(self, models):
        with pytest.raises(DomainError):
            ConfigSpace(
                models=(),
                weight_precisions=(8,),
                kv_strategies=(FullCache(),),
                token_budgets=(2000,),
                group_sizes=(1,),
            )


class TestScoring:
    def test_dataset_scoring_costs(self, models, serial_dataset):
        scored = score_dataset(serial_dataset, models)
        assert len(scored) == len(serial_dataset)
        for s in scored[:10]:
            assert s.cost > 0 and 0 <= s.accuracy <= 1

    def test_space_scoring_interpolates_between_grid(self, models, serial_dataset):
        space = space_from_strategy_keys(
            models=["Qwen3-4B"],
            weight_precisions=[8],
            strategy_keys=["full"],
            token_budgets=[4000],  # between the 2000/6000 grid points
            group_sizes=[1],
        )
        scored = score_space(space, serial_dataset, models)
        assert scored[0].interpolated
        lo = serial_dataset.curve("Qwen3-4B", 8, "full", 1)[0][1]
        hi = serial_dataset.curve("Qwen3-4B", 8, "full", 1)[1][1]
        assert min(lo, hi) <= scored[0].accuracy <= max(lo, hi)

    def test_space_scoring_refuses_extrapolation(self, models, serial_dataset):
        space = space_from_strategy_keys(
            models=["Qwen3-4B"],
            weight_precisions=[8],
            strategy_keys=["full"],
            token_budgets=[60_000],
            group_sizes=[1],
        )
        with pytest.raises(CoverageError):
            score_space(space, serial_dataset, models)

    def test_space_scoring_unmeasured_family(self, models, serial_dataset):
        space = space_from_strategy_keys(
            models=["Qwen3-4B"],
            weight_precisions=[8],
            strategy_keys=["evict:512"],
            token_budgets=[2000],
            group_sizes=[1],
        )
        with pytest.raises(CoverageError):
            score_space(space, serial_dataset, models)

    def test_latency_objective_needs_latency(self, models):
        dataset = build_synthetic_dataset(models, model_names=["Qwen3-4B"], with_latency=False)
        with pytest.raises(CoverageError):
            score_dataset(dataset, models, "latency")


class TestPlan:
    def test_budget_below_cheapest_infeasible(self, models, serial_dataset):
        with pytest.raises(InfeasibleBudgetError) as exc:
            plan(1000, serial_dataset, models)
        err = exc.value
        cheapest = min(score_dataset(serial_dataset, models), key=lambda s: s.cost)
        assert err.cheapest_cost == cheapest.cost
        assert err.cheapest_config_key == cheapest.config_key

    def test_infinite_budget_is_global_best(self, models, serial_dataset):
        rec = plan(float("1e18"), serial_dataset, models)
        best = choose_best(score_dataset(serial_dataset, models))
        assert rec.chosen.config_key == best.config_key
        assert rec.achieved_accuracy == best.accuracy

    def test_feasibility_invariant(self, models, serial_dataset):
        for budget in (4 * 2**30, 10 * 2**30, 40 * 2**30):
            rec = plan(budget, serial_dataset, models)
            assert rec.cost <= budget
            assert rec.memory_bytes <= budget

    def test_frontier_membership(self, models, serial_dataset):
        scored = score_dataset(serial_dataset, models)
        points = {p.config_key: p for p in cost_points(scored)}
        for budget in (4 * 2**30, 12 * 2**30, 80 * 2**30):
            rec = plan(budget, serial_dataset, models)
            chosen_point = points[rec.chosen.config_key]
            feasible = [p for p in points.values() if p.cost <= budget]
            assert not any(dominates(q, chosen_point) for q in feasible)

    def test_budget_monotonicity_and_reference_agreement(self, models, serial_dataset):
        costs = sorted(s.cost for s in score_dataset(serial_dataset, models))
        budgets = [int(costs[0] * 0.9)] + [
            int(costs[0] + (costs[-1] * 1.05 - costs[0]) * i / 49) for i in range(1, 50)
        ]
        last_accuracy = -1.0
        for budget in budgets:
            expected = reference_plan(serial_dataset.records, models, budget)
            if expected is None:
                with pytest.raises(InfeasibleBudgetError):
                    plan(budget, serial_dataset, models)
                continue
            rec = plan(budget, serial_dataset, models)
            exp_rec, exp_cost = expected
            assert rec.chosen.model == exp_rec.model
            assert rec.chosen.weight_quant.precision_bits == exp_rec.weight_precision_bits
            assert rec.chosen.kv_strategy.key == exp_rec.kv_strategy.key
            assert rec.chosen.token_budget == exp_rec.token_budget
            assert rec.chosen.group_size == exp_rec.group_size
            assert rec.cost == exp_cost
            assert rec.achieved_accuracy >= last_accuracy
            last_accuracy = rec.achieved_accuracy

    def test_determinism(self, models, rich_dataset):
        a = plan(20 * 2**30, rich_dataset, models, amortization_batch=4)
        b = plan(20 * 2**30, rich_dataset, models, amortization_batch=4)
        assert a.chosen == b.chosen and a.achieved_accuracy == b.achieved_accuracy
        assert [p.config_key for p in a.frontier_neighborhood] == [
            p.config_key for p in b.frontier_neighborhood
        ]

    def test_tie_break_order(self, models):
        # identical accuracy everywhere; cost then T then G then bits then name decide
        def rec(model, bits, t, g):
            return MeasurementRecord(model, bits, FullCache(), t, g, 0.5)

        dataset = MeasurementDataset(
            [
                rec("Qwen3-0.6B", 4, 2000, 1),
                rec("Qwen3-0.6B", 4, 2000, 2),
                rec("Qwen3-0.6B", 8, 2000, 1),
                rec("Qwen3-0.6B", 4, 4000, 1),
            ]
        )
        chosen = plan(10**12, dataset, models).chosen
        # cheapest cost wins outright here: lowest T, G=1, 4-bit
        assert chosen.token_budget == 2000 and chosen.group_size == 1
        assert chosen.weight_quant.precision_bits == 4

        equal_cost = MeasurementDataset(
            [
                MeasurementRecord("Qwen3-0.6B", 8, FullCache(), 0, 1, 0.5),
                MeasurementRecord("Qwen3-0.6B", 8, EvictCache(4096), 0, 1, 0.5),
            ]
        )
        chosen = plan(10**12, equal_cost, models).chosen
        # full == evict cost at T=0; strategy key breaks the remaining tie
        assert chosen.kv_strategy.key == "evict:4096"

    def test_amortized_cost_basis(self, models, serial_dataset):
        unamortized = plan(3 * 2**30, serial_dataset, models)
        amortized = plan(3 * 2**30, serial_dataset, models, amortization_batch=16)
        # weight sharing frees budget, so the batch-16 answer can't be worse
        assert amortized.achieved_accuracy >= unamortized.achieved_accuracy

    def test_latency_objective(self, models, serial_dataset):
        rec = plan(60.0, serial_dataset, models, objective="latency")
        assert rec.cost_unit == "seconds"
        assert rec.cost <= 60.0

    def test_annotation_neutrality(self, models, serial_dataset):
        with_task = plan(20 * 2**30, serial_dataset, models, task_type="math")
        without = plan(20 * 2**30, serial_dataset, models)
        assert with_task.chosen == without.chosen
        assert with_task.achieved_accuracy == without.achieved_accuracy


class TestThresholds:
    def test_loaded_from_fixture_data(self, models, thresholds):
        assert gib_str(thresholds.allocation_threshold_bytes) == "4.19"
        assert gib_str(thresholds.eviction_threshold_bytes) == "8.94"
        assert thresholds.allocation_ref == "Qwen3-4B @ 8-bit"

    def test_custom_reference_configs(self, models):
        t = RuleThresholds.from_catalog(models, allocation_ref=("Qwen3-0.6B", 16))
        assert gib_str(t.allocation_threshold_bytes) == "1.40"


class TestAnnotations:
    def config(self, model="Qwen3-1.7B", bits=8, strategy=None, t=30_000, g=1):
        return InferenceConfig(
            model=model,
            weight_quant=WeightQuantSpec(bits),
            kv_strategy=strategy or FullCache(),
            token_budget=t,
            group_size=g,
        )

    def rule(self, annotations, rule_id):
        return next(a for a in annotations if a.rule_id == rule_id)

    def test_small_model_saturating_budget_triggers_rule1(self, models, thresholds, serial_dataset):
        anns = annotate_rules(
            self.config("Qwen3-1.7B", 8, t=30_000),
            models=models,
            thresholds=thresholds,
            dataset=serial_dataset,
        )
        assert self.rule(anns, 1).triggered
        assert "below the allocation threshold" in self.rule(anns, 1).explanation

    def test_small_model_modest_budget_does_not_trigger_rule1(self, models, thresholds, serial_dataset):
        anns = annotate_rules(
            self.config("Qwen3-1.7B", 8, t=2000),
            models=models,
            thresholds=thresholds,
            dataset=serial_dataset,
        )
        assert not self.rule(anns, 1).triggered

    def test_at_threshold_counts_as_above(self, models, thresholds, serial_dataset):
        # Qwen3-4B at 8-bit IS the allocation threshold reference
        anns = annotate_rules(
            self.config("Qwen3-4B", 8, t=30_000),
            models=models,
            thresholds=thresholds,
            dataset=serial_dataset,
        )
        rule1 = self.rule(anns, 1)
        assert not rule1.triggered
        assert "at or above" in rule1.explanation

    def test_parallel_scaling_rule3(self, models, thresholds, serial_dataset):
        large = annotate_rules(
            self.config("Qwen3-14B", 8, g=8),
            models=models,
            thresholds=thresholds,
            dataset=serial_dataset,
        )
        rule3 = self.rule(large, 3)
        assert rule3.triggered and "appropriate" in rule3.explanation
        small = annotate_rules(
            self.config("Qwen3-0.6B", 4, g=8),
            models=models,
            thresholds=thresholds,
            dataset=serial_dataset,
        )
        assert self.rule(small, 3).triggered
        assert "memory-inefficient" in self.rule(small, 3).explanation

    def test_task_type_rule2(self, models, thresholds):
        math_4bit = annotate_rules(
            self.config(bits=4), models=models, thresholds=thresholds, task_type="math"
        )
        assert self.rule(math_4bit, 2).triggered
        knowledge_8bit = annotate_rules(
            self.config(bits=8), models=models, thresholds=thresholds, task_type="knowledge"
        )
        assert self.rule(knowledge_8bit, 2).triggered
        unknown = annotate_rules(self.config(bits=4), models=models, thresholds=thresholds)
        assert not self.rule(unknown, 2).triggered

    def test_full_cache_triggers_rule4(self, models, thresholds):
        anns = annotate_rules(self.config(), models=models, thresholds=thresholds)
        assert self.rule(anns, 4).triggered
        compressed = annotate_rules(
            self.config(strategy=EvictCache(4096)), models=models, thresholds=thresholds
        )
        assert not self.rule(compressed, 4).triggered

    def test_quant_below_threshold_triggers_rule5(self, models, thresholds):
        small_quant = annotate_rules(
            self.config("Qwen3-1.7B", 8, strategy=QuantCache(4)),
            models=models,
            thresholds=thresholds,
        )
        assert self.rule(small_quant, 5).triggered
        large_quant = annotate_rules(
            self.config("Qwen3-32B", 8, strategy=QuantCache(4)),
            models=models,
            thresholds=thresholds,
        )
        assert not self.rule(large_quant, 5).triggered

    def test_five_annotations_always(self, models, thresholds):
        anns = annotate_rules(self.config(), models=models, thresholds=thresholds)
        assert [a.rule_id for a in anns] == [1, 2, 3, 4, 5]
        assert all(a.explanation for a in anns)

    def test_bad_task_type_rejected(self, models, thresholds):
        with pytest.raises(DomainError):
            annotate_rules(
                self.config(), models=models, thresholds=thresholds, task_type="trivia"
            )
