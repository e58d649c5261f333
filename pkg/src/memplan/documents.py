"""JSON-document builders shared by the CLI's machine output and the HTTP API.

Field names in these documents are frozen (documented in docs/api.md);
change them only with a schema_version bump.
"""

from __future__ import annotations

from typing import Any

from .catalog import ModelCatalog
from .frontier import CompositionRow, Frontier
from .memory import (
    InferenceConfig,
    ModelSpec,
    amortized_memory_bytes,
    effective_size_bytes,
    gib_str,
    kv_memory_bytes,
    strategy_to_doc,
    weight_memory_bytes,
)
from .planner import Recommendation, RuleThresholds

SCHEMA_VERSION = 1


def model_spec_doc(spec: ModelSpec) -> dict[str, Any]:
    return {
        "name": spec.name,
        "n_layers": spec.n_layers,
        "n_kv_heads": spec.n_kv_heads,
        "d_head": spec.d_head,
        "n_params_quantizable": spec.n_params_quantizable,
        "n_params_unquantizable": spec.n_params_unquantizable,
        "native_precision_bits": spec.native_precision_bits,
        "note": spec.note,
    }


def memory_breakdown_doc(config: InferenceConfig, models: ModelCatalog) -> dict[str, Any]:
    spec = models.get(config.model)
    weights = weight_memory_bytes(spec, config.weight_quant)
    kv = kv_memory_bytes(spec, config.kv_strategy, config.token_budget, config.group_size)
    total = weights + kv
    amortized = amortized_memory_bytes(config, models)
    return {
        "model": config.model,
        "config_key": config.config_key,
        "weight_precision_bits": config.weight_quant.precision_bits,
        "kv_strategy": strategy_to_doc(config.kv_strategy),
        "token_budget": config.token_budget,
        "group_size": config.group_size,
        "amortization_batch": config.amortization_batch,
        "weights_bytes": weights,
        "kv_bytes": kv,
        "total_bytes": total,
        "amortized_bytes": amortized,
        "weights_gib": gib_str(weights),
        "kv_gib": gib_str(kv),
        "total_gib": gib_str(total),
        "amortized_gib": gib_str(amortized),
        "effective_size_bytes": effective_size_bytes(spec, config.weight_quant),
    }


def config_doc(config: InferenceConfig) -> dict[str, Any]:
    return {
        "model": config.model,
        "weight_precision_bits": config.weight_quant.precision_bits,
        "weight_group_size": config.weight_quant.group_size,
        "kv_strategy": strategy_to_doc(config.kv_strategy),
        "token_budget": config.token_budget,
        "group_size": config.group_size,
        "amortization_batch": config.amortization_batch,
        "config_key": config.config_key,
    }


def composition_row_doc(row: CompositionRow) -> dict[str, Any]:
    return {
        "cost": row.cost,
        "unit": row.unit,
        "accuracy": row.accuracy,
        "config_key": row.config_key,
        "model": row.model,
        "weight_precision_bits": row.weight_precision_bits,
        "kv_strategy": row.kv_strategy_key,
        "token_budget": row.token_budget,
        "group_size": row.group_size,
        "effective_size_bytes": row.effective_size_bytes,
        "co_optimal": row.co_optimal,
    }


def frontier_doc(frontier: Frontier) -> list[dict[str, Any]]:
    return [
        {
            "cost": p.cost,
            "unit": p.unit,
            "accuracy": p.accuracy,
            "config_key": p.config_key,
            "co_optimal": co,
        }
        for p, co in zip(frontier.points, frontier.co_optimal)
    ]


def thresholds_doc(thresholds: RuleThresholds) -> dict[str, Any]:
    return {
        "allocation_threshold_bytes": thresholds.allocation_threshold_bytes,
        "allocation_threshold_gib": gib_str(thresholds.allocation_threshold_bytes),
        "allocation_ref": thresholds.allocation_ref,
        "eviction_threshold_bytes": thresholds.eviction_threshold_bytes,
        "eviction_threshold_gib": gib_str(thresholds.eviction_threshold_bytes),
        "eviction_ref": thresholds.eviction_ref,
        "saturating_fraction": thresholds.saturating_fraction,
    }


def recommendation_doc(rec: Recommendation) -> dict[str, Any]:
    return {
        "chosen": config_doc(rec.chosen),
        "achieved_accuracy": rec.achieved_accuracy,
        "cost": rec.cost,
        "cost_unit": rec.cost_unit,
        "memory_bytes": rec.memory_bytes,
        "memory_gib": gib_str(rec.memory_bytes),
        "interpolated": rec.interpolated,
        "thresholds": thresholds_doc(rec.thresholds),
        "annotations": [
            {"rule_id": a.rule_id, "triggered": a.triggered, "explanation": a.explanation}
            for a in rec.annotations
        ],
        "frontier_neighborhood": frontier_doc(rec.frontier_neighborhood),
    }


def envelope(result: Any = None, error: dict | None = None) -> dict[str, Any]:
    if error is not None:
        return {"ok": False, "schema_version": SCHEMA_VERSION, "error": error}
    return {"ok": True, "schema_version": SCHEMA_VERSION, "result": result}


__all__ = [
    "SCHEMA_VERSION",
    "model_spec_doc",
    "memory_breakdown_doc",
    "config_doc",
    "composition_row_doc",
    "frontier_doc",
    "thresholds_doc",
    "recommendation_doc",
    "envelope",
]
