"""memplan: memory-budget planning for reasoning-LLM deployments.

Byte-exact footprint accounting for (model, weight precision, KV-cache
strategy, token budget, group size) configurations, majority-vote accuracy
estimation from sample pools, Pareto frontier extraction over ingested
measurements, and budget-constrained configuration recommendations with
scale-dependent rule annotations.
"""

from .catalog import ModelCatalog, bundled_spec_path, load_bundled_models, load_model_specs
from .errors import (
    CapacityError,
    ConflictError,
    CoverageError,
    DomainError,
    InfeasibleBudgetError,
    MemplanError,
    ModelNotFoundError,
    ParseError,
    RangeError,
    UnitMismatchError,
)
from .memory import (
    GIB,
    EvictCache,
    FullCache,
    InferenceConfig,
    KvCacheStrategy,
    ModelSpec,
    QuantCache,
    WeightQuantSpec,
    amortized_memory_bytes,
    effective_size_bytes,
    gib_str,
    kv_bytes_per_token,
    kv_memory_bytes,
    strategy_from_doc,
    strategy_from_key,
    strategy_to_doc,
    total_memory_bytes,
    weight_memory_bytes,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # memory model
    "GIB",
    "ModelSpec",
    "WeightQuantSpec",
    "FullCache",
    "EvictCache",
    "QuantCache",
    "KvCacheStrategy",
    "InferenceConfig",
    "kv_bytes_per_token",
    "weight_memory_bytes",
    "effective_size_bytes",
    "kv_memory_bytes",
    "total_memory_bytes",
    "amortized_memory_bytes",
    "gib_str",
    "strategy_from_key",
    "strategy_from_doc",
    "strategy_to_doc",
    # catalog
    "ModelCatalog",
    "load_model_specs",
    "load_bundled_models",
    "bundled_spec_path",
    # errors
    "MemplanError",
    "DomainError",
    "RangeError",
    "UnitMismatchError",
    "ParseError",
    "ConflictError",
    "ModelNotFoundError",
    "CapacityError",
    "CoverageError",
    "InfeasibleBudgetError",
]
