"""Byte-exact memory accounting for reasoning-LLM inference configurations.

Weight footprints follow grouped weight-only quantization accounting: each
quantizable parameter costs its low-bit payload plus a per-group share of the
scale/zero-point metadata, while embedding/norm/head parameters stay at the
native precision. KV-cache footprints grow linearly in tokens and sampling
group size, with eviction capping the token count and cache quantization
lowering the per-element cost (keeping a small full-precision residual
buffer of recent tokens).

All totals are accumulated in bits as exact rationals and floored to whole
bytes once, at the end; GiB strings are a display concern only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import TYPE_CHECKING, Union

from .errors import DomainError, RangeError

if TYPE_CHECKING:
    from .catalog import ModelCatalog

GIB = 1024**3
SUPPORTED_WEIGHT_BITS = (4, 8, 16)
SUPPORTED_KV_BITS = (2, 4, 8)


def _require_positive(value: int, name: str) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
        raise DomainError(f"{name} must be a positive integer, got {value!r}")


def _require_non_negative(value: int, name: str) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise DomainError(f"{name} must be a non-negative integer, got {value!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Architecture and parameter-count description of one model."""

    name: str
    n_layers: int
    n_kv_heads: int
    d_head: int
    n_params_quantizable: int
    n_params_unquantizable: int
    native_precision_bits: int = 16
    note: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise DomainError("model name must be non-empty")
        _require_positive(self.n_layers, "n_layers")
        _require_positive(self.n_kv_heads, "n_kv_heads")
        _require_positive(self.d_head, "d_head")
        _require_positive(self.native_precision_bits, "native_precision_bits")
        _require_non_negative(self.n_params_quantizable, "n_params_quantizable")
        _require_non_negative(self.n_params_unquantizable, "n_params_unquantizable")
        if self.n_params_quantizable == 0 and self.n_params_unquantizable == 0:
            raise DomainError("model must have a non-zero parameter count")


@dataclass(frozen=True)
class WeightQuantSpec:
    """Weight precision plus grouped-quantization overhead parameters."""

    precision_bits: int
    group_size: int = 128
    scale_bits: int = 16
    zero_point_bits: int = 0

    def __post_init__(self) -> None:
        if self.precision_bits not in SUPPORTED_WEIGHT_BITS:
            raise DomainError(
                f"weight precision must be one of {SUPPORTED_WEIGHT_BITS}, got {self.precision_bits}"
            )
        _require_positive(self.group_size, "group_size")
        _require_non_negative(self.scale_bits, "scale_bits")
        _require_non_negative(self.zero_point_bits, "zero_point_bits")


@dataclass(frozen=True)
class FullCache:
    """Keep every cached token at native precision."""

    @property
    def key(self) -> str:
        return "full"


@dataclass(frozen=True)
class EvictCache:
    """Cap the cache at ``retain_tokens`` tokens; memory is constant beyond it."""

    retain_tokens: int

    def __post_init__(self) -> None:
        _require_positive(self.retain_tokens, "retain_tokens")

    @property
    def key(self) -> str:
        return f"evict:{self.retain_tokens}"


@dataclass(frozen=True)
class QuantCache:
    """Store cached tokens at reduced precision with per-group scales.

    The most recent ``residual_tokens`` tokens stay at native precision;
    set it to 0 for the bare reduced-precision accounting.
    """

    precision_bits: int
    group_size: int = 64
    scale_bits: int = 16
    zero_point_bits: int = 0
    residual_tokens: int = 128

    def __post_init__(self) -> None:
        if self.precision_bits not in SUPPORTED_KV_BITS:
            raise DomainError(
                f"kv precision must be one of {SUPPORTED_KV_BITS}, got {self.precision_bits}"
            )
        _require_positive(self.group_size, "group_size")
        _require_non_negative(self.scale_bits, "scale_bits")
        _require_non_negative(self.zero_point_bits, "zero_point_bits")
        _require_non_negative(self.residual_tokens, "residual_tokens")

    @property
    def key(self) -> str:
        return (
            f"quant:{self.precision_bits}:g{self.group_size}"
            f":s{self.scale_bits}:z{self.zero_point_bits}:r{self.residual_tokens}"
        )


KvCacheStrategy = Union[FullCache, EvictCache, QuantCache]


def strategy_from_key(key: str) -> KvCacheStrategy:
    """Parse a canonical strategy key ("full", "evict:4096", "quant:4:g64:s16:z0:r128").

    Quant accepts partial forms; omitted parts take the defaults, e.g.
    "quant:4" is 4-bit with group size 64 and a 128-token residual buffer.
    """
    parts = key.strip().split(":")
    kind = parts[0]
    try:
        if kind == "full" and len(parts) == 1:
            return FullCache()
        if kind == "evict" and len(parts) == 2:
            return EvictCache(retain_tokens=int(parts[1]))
        if kind == "quant" and 2 <= len(parts) <= 6:
            kwargs: dict[str, int] = {"precision_bits": int(parts[1])}
            names = {"g": "group_size", "s": "scale_bits", "z": "zero_point_bits", "r": "residual_tokens"}
            for part in parts[2:]:
                if not part or part[0] not in names:
                    raise ValueError(part)
                kwargs[names[part[0]]] = int(part[1:])
            return QuantCache(**kwargs)
    except ValueError as exc:
        raise DomainError(f"malformed kv strategy key {key!r}") from exc
    raise DomainError(f"malformed kv strategy key {key!r}")


def strategy_to_doc(strategy: KvCacheStrategy) -> dict:
    """Structured (JSON-ready) form of a strategy."""
    if isinstance(strategy, FullCache):
        return {"kind": "full"}
    if isinstance(strategy, EvictCache):
        return {"kind": "evict", "retain_tokens": strategy.retain_tokens}
    return {
        "kind": "quant",
        "precision_bits": strategy.precision_bits,
        "group_size": strategy.group_size,
        "scale_bits": strategy.scale_bits,
        "zero_point_bits": strategy.zero_point_bits,
        "residual_tokens": strategy.residual_tokens,
    }


def strategy_from_doc(doc: dict) -> KvCacheStrategy:
    """Inverse of :func:`strategy_to_doc`; raises DomainError on bad input."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise DomainError(f"kv strategy document must be an object with a 'kind', got {doc!r}")
    kind = doc["kind"]
    fields_ = {k: v for k, v in doc.items() if k != "kind"}
    try:
        if kind == "full":
            if fields_:
                raise DomainError(f"full strategy takes no parameters, got {sorted(fields_)}")
            return FullCache()
        if kind == "evict":
            return EvictCache(**fields_)
        if kind == "quant":
            return QuantCache(**fields_)
    except TypeError as exc:
        raise DomainError(f"bad kv strategy fields for kind {kind!r}: {exc}") from exc
    raise DomainError(f"unknown kv strategy kind {kind!r}")


@dataclass(frozen=True)
class InferenceConfig:
    """One point in the configuration space: model, precisions, cache policy, budget."""

    model: str
    weight_quant: WeightQuantSpec
    kv_strategy: KvCacheStrategy = field(default_factory=FullCache)
    token_budget: int = 0
    group_size: int = 1
    amortization_batch: int = 1

    def __post_init__(self) -> None:
        _require_non_negative(self.token_budget, "token_budget")
        _require_positive(self.group_size, "group_size")
        _require_positive(self.amortization_batch, "amortization_batch")

    @property
    def config_key(self) -> str:
        w = self.weight_quant
        return (
            f"{self.model}|w{w.precision_bits}:g{w.group_size}|{self.kv_strategy.key}"
            f"|T{self.token_budget}|G{self.group_size}|B{self.amortization_batch}"
        )


def kv_bytes_per_token(spec: ModelSpec) -> int:
    """Native-precision cache bytes for one token (keys and values, all layers)."""
    bits = spec.n_layers * spec.n_kv_heads * spec.d_head * 2 * spec.native_precision_bits
    return _bits_to_bytes(bits)


def weight_memory_bytes(spec: ModelSpec, quant: WeightQuantSpec) -> int:
    """Total weight footprint in bytes under the given quantization."""
    native = spec.native_precision_bits
    if quant.precision_bits >= native:
        # Native-precision storage: no scales, everything at native width.
        bits: Fraction | int = (spec.n_params_quantizable + spec.n_params_unquantizable) * native
    else:
        payload = spec.n_params_quantizable * quant.precision_bits
        overhead = Fraction(
            spec.n_params_quantizable * (quant.scale_bits + quant.zero_point_bits),
            quant.group_size,
        )
        bits = payload + overhead + spec.n_params_unquantizable * native
    return _bits_to_bytes(bits)


def effective_size_bytes(spec: ModelSpec, quant: WeightQuantSpec) -> int:
    """Weight footprint under quantization; the scale variable planner thresholds use."""
    return weight_memory_bytes(spec, quant)


def kv_memory_bytes(
    spec: ModelSpec,
    strategy: KvCacheStrategy,
    token_budget: int,
    group_size: int = 1,
) -> int:
    """Cache footprint in bytes for ``group_size`` generations of ``token_budget`` tokens."""
    _require_non_negative(token_budget, "token_budget")
    _require_positive(group_size, "group_size")
    per_token = kv_bytes_per_token(spec)
    if isinstance(strategy, FullCache):
        return group_size * token_budget * per_token
    if isinstance(strategy, EvictCache):
        return group_size * min(token_budget, strategy.retain_tokens) * per_token
    if isinstance(strategy, QuantCache):
        residual = min(token_budget, strategy.residual_tokens)
        quantized = max(token_budget - strategy.residual_tokens, 0)
        elements = spec.n_layers * spec.n_kv_heads * spec.d_head * 2
        per_element_bits = strategy.precision_bits + Fraction(
            strategy.scale_bits + strategy.zero_point_bits, strategy.group_size
        )
        bits = group_size * (
            residual * per_token * 8 + quantized * elements * per_element_bits
        )
        return _bits_to_bytes(bits)
    raise DomainError(f"unknown kv cache strategy {strategy!r}")


def total_memory_bytes(config: InferenceConfig, models: "ModelCatalog") -> int:
    """Weights plus cache for the configuration's token budget and group size."""
    spec = models.get(config.model)
    return weight_memory_bytes(spec, config.weight_quant) + kv_memory_bytes(
        spec, config.kv_strategy, config.token_budget, config.group_size
    )


def amortized_memory_bytes(
    config: InferenceConfig,
    models: "ModelCatalog",
    theoretical_batch: int | None = None,
) -> int:
    """Per-generation footprint with weights shared across a concurrent batch.

    The weight term is divided by the batch size in exact rational form and
    the total floored once; the cache term is charged in full for this
    configuration's own group size.
    """
    batch = config.amortization_batch if theoretical_batch is None else theoretical_batch
    _require_positive(batch, "theoretical_batch")
    spec = models.get(config.model)
    weights = Fraction(weight_memory_bytes(spec, config.weight_quant), batch)
    kv = kv_memory_bytes(spec, config.kv_strategy, config.token_budget, config.group_size)
    total = weights + kv
    return int(total)  # floor: both terms are non-negative


def _bits_to_bytes(bits: "Fraction | int") -> int:
    """Floor an exact bit count to whole bytes; negative counts are a bug upstream."""
    if bits < 0:
        raise RangeError(f"negative bit count {bits!r}")
    if isinstance(bits, Fraction):
        return int(bits / 8)
    return bits // 8


def gib_str(n_bytes: int) -> str:
    """Render a byte count as GiB with two decimals (half-up), e.g. '4.12'."""
    return str((Decimal(n_bytes) / Decimal(GIB)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def format_bytes_line(n_bytes: int) -> str:
    """Human line used by reports: exact bytes plus rounded GiB."""
    return f"{n_bytes} B ({gib_str(n_bytes)} GiB)"


__all__ = [
    "GIB",
    "ModelSpec",
    "WeightQuantSpec",
    "FullCache",
    "EvictCache",
    "QuantCache",
    "KvCacheStrategy",
    "InferenceConfig",
    "strategy_from_key",
    "strategy_from_doc",
    "strategy_to_doc",
    "kv_bytes_per_token",
    "weight_memory_bytes",
    "effective_size_bytes",
    "kv_memory_bytes",
    "total_memory_bytes",
    "amortized_memory_bytes",
    "gib_str",
    "format_bytes_line",
]
