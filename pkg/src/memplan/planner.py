"""Configuration-space enumeration and budget-constrained recommendations.

``plan`` answers "best accuracy under a byte budget": it scores candidate
configurations from ingested measurements (interpolating along the token
axis within one measured family when asked to score an explicit space),
filters by the budget, and picks the maximum-accuracy configuration under a
deterministic total tie order. Recommendations carry a slice of the Pareto
frontier around the budget plus advisory annotations from five
scale-dependent deployment rules; annotations never influence the choice.

The rule thresholds are data, not code constants: by default they are the
effective sizes of two reference configurations from the loaded model spec
file, because the inflection points can shift as model families evolve.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

from .catalog import ModelCatalog
from .errors import CoverageError, DomainError, InfeasibleBudgetError
from .frontier import (
    ConfigAttributes,
    CostPoint,
    Frontier,
    frontier_composition,
    interpolate_accuracy,
    pareto_frontier,
)
from .measurements import MeasurementDataset
from .memory import (
    InferenceConfig,
    KvCacheStrategy,
    WeightQuantSpec,
    amortized_memory_bytes,
    effective_size_bytes,
    gib_str,
    strategy_from_key,
)

OBJECTIVES = ("memory", "latency")
COST_UNITS = {"memory": "bytes", "latency": "seconds", "throughput": "inverse_rps"}
TASK_TYPES = ("math", "knowledge")


@dataclass(frozen=True)
class ConfigSpace:
    """Axis lists whose cross-product is the candidate configuration set."""

    models: tuple[str, ...]
    weight_precisions: tuple[int, ...]
    kv_strategies: tuple[KvCacheStrategy, ...]
    token_budgets: tuple[int, ...]
    group_sizes: tuple[int, ...]
    amortization_batch: int = 1
    weight_group_size: int = 128

    def __post_init__(self) -> None:
        for name in ("models", "weight_precisions", "kv_strategies", "token_budgets", "group_sizes"):
            if not getattr(self, name):
                raise DomainError(f"configuration space axis {name!r} is empty")


def enumerate_configs(space: ConfigSpace) -> list[InferenceConfig]:
    """Full cross-product, ordered by (model, precision, strategy, T, G).

    Models keep their given order; the numeric axes are ascending and
    strategies sort by their canonical key.
    """
    configs = []
    strategies = sorted(space.kv_strategies, key=lambda s: s.key)
    for model in space.models:
        for bits in sorted(space.weight_precisions):
            quant = WeightQuantSpec(precision_bits=bits, group_size=space.weight_group_size)
            for strategy in strategies:
                for budget in sorted(space.token_budgets):
                    for g in sorted(space.group_sizes):
                        configs.append(
                            InferenceConfig(
                                model=model,
                                weight_quant=quant,
                                kv_strategy=strategy,
                                token_budget=budget,
                                group_size=g,
                                amortization_batch=space.amortization_batch,
                            )
                        )
    return configs


@dataclass(frozen=True)
class ScoredConfig:
    config: InferenceConfig
    cost: float
    accuracy: float
    interpolated: bool = False

    @property
    def config_key(self) -> str:
        return self.config.config_key


def _memory_cost(config: InferenceConfig, models: ModelCatalog) -> int:
    # Amortized cost equals total cost at batch 1.
    return amortized_memory_bytes(config, models)


def score_dataset(
    dataset: MeasurementDataset,
    models: ModelCatalog,
    objective: str = "memory",
    amortization_batch: int = 1,
) -> list[ScoredConfig]:
    """Score every measured configuration directly, one point per record."""
    _check_objective(objective)
    scored = []
    for rec in dataset:
        config = InferenceConfig(
            model=rec.model,
            weight_quant=WeightQuantSpec(precision_bits=rec.weight_precision_bits),
            kv_strategy=rec.kv_strategy,
            token_budget=rec.token_budget,
            group_size=rec.group_size,
            amortization_batch=amortization_batch,
        )
        if objective == "memory":
            cost: float = _memory_cost(config, models)
        else:
            if rec.latency_seconds is None:
                raise CoverageError(f"record {rec.key} has no latency_seconds for the latency objective")
            cost = rec.latency_seconds
        scored.append(ScoredConfig(config=config, cost=cost, accuracy=rec.accuracy))
    return scored


def score_space(
    space: ConfigSpace,
    dataset: MeasurementDataset,
    models: ModelCatalog,
    objective: str = "memory",
) -> list[ScoredConfig]:
    """Score an explicit space against the dataset.

    Accuracy (and latency, when that is the objective) comes from the exact
    measured point when present, otherwise from piecewise-linear
    interpolation along the token axis within the same (model, precision,
    strategy, G) family. Token budgets outside a family's measured grid are
    a coverage violation: values are never extrapolated.
    """
    _check_objective(objective)
    scored = []
    curves: dict[tuple, list[tuple[int, float]]] = {}
    for config in enumerate_configs(space):
        family = (
            config.model,
            config.weight_quant.precision_bits,
            config.kv_strategy.key,
            config.group_size,
        )
        accuracy, interpolated = _family_value(dataset, curves, family, config.token_budget, "accuracy")
        if objective == "memory":
            cost: float = _memory_cost(config, models)
        else:
            cost, _ = _family_value(dataset, curves, family, config.token_budget, "latency_seconds")
        scored.append(
            ScoredConfig(config=config, cost=cost, accuracy=accuracy, interpolated=interpolated)
        )
    return scored


def _family_value(
    dataset: MeasurementDataset,
    cache: dict[tuple, list[tuple[int, float]]],
    family: tuple,
    token_budget: int,
    value: str,
) -> tuple[float, bool]:
    cache_key = family + (value,)
    curve = cache.get(cache_key)
    if curve is None:
        curve = dataset.curve(family[0], family[1], family[2], family[3], value=value)
        cache[cache_key] = curve
    if not curve:
        raise CoverageError(f"no measurements with {value!r} for family {family}")
    budgets = [t for t, _ in curve]
    if token_budget < budgets[0] or token_budget > budgets[-1]:
        raise CoverageError(
            f"token budget {token_budget} lies outside the measured grid "
            f"[{budgets[0]}, {budgets[-1]}] for family {family}; refusing to extrapolate"
        )
    result = interpolate_accuracy(curve, token_budget)
    return result.value, token_budget not in budgets


def _check_objective(objective: str) -> None:
    if objective not in OBJECTIVES:
        raise DomainError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


@dataclass(frozen=True)
class RuleThresholds:
    """Scale thresholds driving the advisory rules, loaded from spec data."""

    allocation_threshold_bytes: int
    eviction_threshold_bytes: int
    saturating_fraction: float = 0.5
    allocation_ref: str = ""
    eviction_ref: str = ""

    @classmethod
    def from_catalog(
        cls,
        models: ModelCatalog,
        allocation_ref: tuple[str, int] = ("Qwen3-4B", 8),
        eviction_ref: tuple[str, int] = ("Qwen3-8B", 8),
    ) -> "RuleThresholds":
        alloc = effective_size_bytes(
            models.get(allocation_ref[0]), WeightQuantSpec(precision_bits=allocation_ref[1])
        )
        evict = effective_size_bytes(
            models.get(eviction_ref[0]), WeightQuantSpec(precision_bits=eviction_ref[1])
        )
        return cls(
            allocation_threshold_bytes=alloc,
            eviction_threshold_bytes=evict,
            allocation_ref=f"{allocation_ref[0]} @ {allocation_ref[1]}-bit",
            eviction_ref=f"{eviction_ref[0]} @ {eviction_ref[1]}-bit",
        )


@dataclass(frozen=True)
class RuleAnnotation:
    rule_id: int
    triggered: bool
    explanation: str


def annotate_rules(
    config: InferenceConfig,
    *,
    models: ModelCatalog,
    thresholds: RuleThresholds,
    dataset: MeasurementDataset | None = None,
    task_type: str | None = None,
) -> list[RuleAnnotation]:
    """Evaluate the five scale-dependent deployment rules for one configuration.

    Purely advisory: callers display the annotations; nothing here feeds
    back into planning.
    """
    if task_type is not None and task_type not in TASK_TYPES:
        raise DomainError(f"task_type must be one of {TASK_TYPES} or None, got {task_type!r}")
    spec = models.get(config.model)
    eff = effective_size_bytes(spec, config.weight_quant)
    eff_gib = gib_str(eff)
    alloc_gib = gib_str(thresholds.allocation_threshold_bytes)
    below_alloc = eff < thresholds.allocation_threshold_bytes
    bits = config.weight_quant.precision_bits

    max_budget = max((r.token_budget for r in dataset), default=None) if dataset is not None else None
    if max_budget:
        saturating = config.token_budget >= thresholds.saturating_fraction * max_budget
        budget_note = f"token budget {config.token_budget} vs. measured max {max_budget}"
    else:
        saturating = True
        budget_note = f"token budget {config.token_budget} (no measured budget context)"

    annotations = []

    if below_alloc and saturating:
        annotations.append(
            RuleAnnotation(
                1,
                True,
                f"effective size {eff_gib} GiB is below the allocation threshold of {alloc_gib} GiB "
                f"with a near-saturating budget ({budget_note}): memory is better spent on a larger "
                "effective model size than on longer generation (rule 1)",
            )
        )
    elif below_alloc:
        annotations.append(
            RuleAnnotation(
                1,
                False,
                f"effective size {eff_gib} GiB is below the allocation threshold of {alloc_gib} GiB; "
                "as the token budget approaches saturation, favor scale over longer generation (rule 1)",
            )
        )
    else:
        annotations.append(
            RuleAnnotation(
                1,
                False,
                f"effective size {eff_gib} GiB is at or above the allocation threshold of {alloc_gib} GiB: "
                "raising the token budget until accuracy saturates is the memory-efficient direction (rule 1)",
            )
        )

    if task_type == "math" and bits == 4:
        annotations.append(
            RuleAnnotation(
                2,
                True,
                "4-bit weights are memory-inefficient for mathematical reasoning; "
                "8- or 16-bit weights with a smaller cache tend to win (rule 2)",
            )
        )
    elif task_type == "knowledge" and bits > 4:
        annotations.append(
            RuleAnnotation(
                2,
                True,
                f"{bits}-bit weights on a knowledge-intensive task: 4-bit is broadly "
                "memory-optimal there, so consider dropping precision (rule 2)",
            )
        )
    elif task_type is None:
        annotations.append(
            RuleAnnotation(2, False, "task type not supplied; precision-vs-task guidance unavailable (rule 2)")
        )
    else:
        annotations.append(
            RuleAnnotation(2, False, f"{bits}-bit weights suit the {task_type} task profile (rule 2)")
        )

    if config.group_size > 1 and below_alloc:
        annotations.append(
            RuleAnnotation(
                3,
                True,
                f"parallel scaling (G={config.group_size}) below the allocation threshold is "
                "memory-inefficient; serial scaling dominates at this scale (rule 3)",
            )
        )
    elif config.group_size > 1:
        annotations.append(
            RuleAnnotation(
                3,
                True,
                f"parallel scaling (G={config.group_size}) is appropriate at or above the allocation "
                "threshold; the memory-optimal group size grows with the budget (rule 3)",
            )
        )
    else:
        annotations.append(
            RuleAnnotation(
                3,
                False,
                "serial decoding (G=1); parallel scaling pays off only at or above the allocation threshold (rule 3)",
            )
        )

    strat = config.kv_strategy
    if strat.key == "full":
        annotations.append(
            RuleAnnotation(
                4,
                True,
                "no KV-cache compression selected; weight quantization alone is not memory-optimal — "
                "cache eviction or quantization advances the frontier at every weight precision (rule 4)",
            )
        )
    else:
        annotations.append(
            RuleAnnotation(4, False, f"KV cache already compressed ({strat.key}) (rule 4)")
        )

    evict_gib = gib_str(thresholds.eviction_threshold_bytes)
    if strat.key.startswith("quant") and eff < thresholds.eviction_threshold_bytes:
        annotations.append(
            RuleAnnotation(
                5,
                True,
                f"cache quantization below the eviction threshold of {evict_gib} GiB: eviction "
                "typically gives the better memory trade-off at this scale (rule 5)",
            )
        )
    elif strat.key.startswith("quant"):
        annotations.append(
            RuleAnnotation(
                5,
                False,
                f"at or above the eviction threshold of {evict_gib} GiB cache quantization "
                "is competitive with eviction (rule 5)",
            )
        )
    elif strat.key.startswith("evict"):
        annotations.append(
            RuleAnnotation(
                5,
                False,
                f"cache eviction selected; it is the preferred compression below {evict_gib} GiB "
                "of effective size (rule 5)",
            )
        )
    else:
        annotations.append(
            RuleAnnotation(
                5,
                False,
                f"no cache compression; below {evict_gib} GiB of effective size eviction is the "
                "preferred compression, above it quantization competes (rule 5)",
            )
        )

    return annotations


@dataclass(frozen=True)
class Recommendation:
    chosen: InferenceConfig
    achieved_accuracy: float
    cost: float
    cost_unit: str
    memory_bytes: int
    frontier_neighborhood: Frontier
    annotations: tuple[RuleAnnotation, ...]
    thresholds: RuleThresholds
    interpolated: bool = False


def _tie_key(s: ScoredConfig) -> tuple:
    c = s.config
    return (
        -s.accuracy,
        s.cost,
        c.token_budget,
        c.group_size,
        -c.weight_quant.precision_bits,
        c.model,
        c.kv_strategy.key,
        c.config_key,
    )


def choose_best(scored: Sequence[ScoredConfig]) -> ScoredConfig:
    """Deterministic argmax: accuracy first, then the documented tie order."""
    if not scored:
        raise DomainError("cannot choose from an empty candidate list")
    return min(scored, key=_tie_key)


def plan(
    budget: float,
    dataset: MeasurementDataset,
    models: ModelCatalog,
    *,
    space: ConfigSpace | None = None,
    objective: str = "memory",
    amortization_batch: int = 1,
    task_type: str | None = None,
    thresholds: RuleThresholds | None = None,
) -> Recommendation:
    """Best-accuracy configuration with cost at or under ``budget``.

    Cost is per-generation memory in bytes (amortized across
    ``amortization_batch`` concurrent generations when it exceeds 1) or
    measured latency in seconds under the latency objective. Without an
    explicit ``space``, the candidates are exactly the measured
    configurations.
    """
    _check_objective(objective)
    if not budget > 0:
        raise DomainError(f"budget must be positive, got {budget}")
    if amortization_batch < 1:
        raise DomainError(f"amortization_batch must be >= 1, got {amortization_batch}")
    if space is not None:
        if space.amortization_batch != amortization_batch:
            space = replace(space, amortization_batch=amortization_batch)
        scored = score_space(space, dataset, models, objective)
    else:
        scored = score_dataset(dataset, models, objective, amortization_batch)
    if not scored:
        raise DomainError("no candidate configurations to plan over")
    feasible = [s for s in scored if s.cost <= budget]
    if not feasible:
        cheapest = min(scored, key=lambda s: (s.cost, _tie_key(s)))
        raise InfeasibleBudgetError(budget, cheapest.cost, cheapest.config_key)
    best = choose_best(feasible)
    if thresholds is None:
        thresholds = RuleThresholds.from_catalog(models)
    annotations = annotate_rules(
        best.config, models=models, thresholds=thresholds, dataset=dataset, task_type=task_type
    )
    unit = COST_UNITS[objective]
    frontier = pareto_frontier(cost_points(scored, unit))
    return Recommendation(
        chosen=best.config,
        achieved_accuracy=best.accuracy,
        cost=best.cost,
        cost_unit=unit,
        memory_bytes=_memory_cost(best.config, models),
        frontier_neighborhood=frontier.slice_around(budget),
        annotations=tuple(annotations),
        thresholds=thresholds,
        interpolated=best.interpolated,
    )


def cost_points(scored: Sequence[ScoredConfig], unit: str = "bytes") -> list[CostPoint]:
    return [
        CostPoint(cost=float(s.cost), accuracy=s.accuracy, unit=unit, config_key=s.config_key)
        for s in scored
    ]


def attributes_map(
    scored: Sequence[ScoredConfig], models: ModelCatalog
) -> dict[str, ConfigAttributes]:
    attrs = {}
    for s in scored:
        c = s.config
        attrs[s.config_key] = ConfigAttributes(
            model=c.model,
            weight_precision_bits=c.weight_quant.precision_bits,
            kv_strategy_key=c.kv_strategy.key,
            token_budget=c.token_budget,
            group_size=c.group_size,
            effective_size_bytes=effective_size_bytes(models.get(c.model), c.weight_quant),
        )
    return attrs


def frontier_with_composition(
    scored: Sequence[ScoredConfig], models: ModelCatalog, unit: str = "bytes"
):
    """Frontier plus its attribute projection, for exports and the HTTP layer."""
    frontier = pareto_frontier(cost_points(scored, unit))
    rows = frontier_composition(frontier, attributes_map(scored, models))
    return frontier, rows


def space_from_strategy_keys(
    models: Sequence[str],
    weight_precisions: Sequence[int],
    strategy_keys: Sequence[str],
    token_budgets: Sequence[int],
    group_sizes: Sequence[int],
    amortization_batch: int = 1,
) -> ConfigSpace:
    """Convenience constructor taking canonical strategy keys."""
    return ConfigSpace(
        models=tuple(models),
        weight_precisions=tuple(weight_precisions),
        kv_strategies=tuple(strategy_from_key(k) for k in strategy_keys),
        token_budgets=tuple(token_budgets),
        group_sizes=tuple(group_sizes),
        amortization_batch=amortization_batch,
    )


__all__ = [
    "OBJECTIVES",
    "COST_UNITS",
    "TASK_TYPES",
    "ConfigSpace",
    "enumerate_configs",
    "ScoredConfig",
    "score_dataset",
    "score_space",
    "RuleThresholds",
    "RuleAnnotation",
    "annotate_rules",
    "Recommendation",
    "choose_best",
    "plan",
    "cost_points",
    "attributes_map",
    "frontier_with_composition",
    "space_from_strategy_keys",
]
