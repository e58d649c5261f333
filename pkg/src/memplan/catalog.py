"""Loading and lookup of model spec files.

A model spec file is a versioned JSON document with one object per model
(see docs/file-formats.md). The package ships reconciled specs for the six
Qwen3 sizes under ``memplan/data/qwen3.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import IO, Iterator

from .errors import ConflictError, ModelNotFoundError, ParseError
from .memory import ModelSpec

SCHEMA_VERSION = 1
BUNDLED_SPEC_NAME = "qwen3.json"

_REQUIRED_FIELDS = (
    "name",
    "n_layers",
    "n_kv_heads",
    "d_head",
    "n_params_quantizable",
    "n_params_unquantizable",
)
_OPTIONAL_FIELDS = ("native_precision_bits", "note")


@dataclass(frozen=True)
class ModelCatalog:
    """Immutable name -> ModelSpec mapping."""

    models: tuple[ModelSpec, ...]

    def __post_init__(self) -> None:
        seen = set()
        for spec in self.models:
            if spec.name in seen:
                raise ConflictError(f"duplicate model name {spec.name!r}")
            seen.add(spec.name)

    def get(self, name: str) -> ModelSpec:
        for spec in self.models:
            if spec.name == name:
                return spec
        raise ModelNotFoundError(name, self.names())

    def names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.models)

    def __iter__(self) -> Iterator[ModelSpec]:
        return iter(self.models)

    def __len__(self) -> int:
        return len(self.models)


def parse_model_specs(text: str) -> ModelCatalog:
    """Parse a model spec document; raises ParseError naming the bad field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(
            f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})",
            field="schema_version",
        )
    raw_models = doc.get("models")
    if not isinstance(raw_models, list):
        raise ParseError("'models' must be a list", field="models")
    specs = []
    for i, entry in enumerate(raw_models):
        if not isinstance(entry, dict):
            raise ParseError(f"models[{i}] must be an object", field="models")
        for fld in _REQUIRED_FIELDS:
            if fld not in entry:
                raise ParseError(f"models[{i}] missing required field", field=fld)
        unknown = set(entry) - set(_REQUIRED_FIELDS) - set(_OPTIONAL_FIELDS)
        if unknown:
            raise ParseError(
                f"models[{i}] has unknown fields {sorted(unknown)}", field=sorted(unknown)[0]
            )
        try:
            specs.append(ModelSpec(**entry))
        except Exception as exc:
            raise ParseError(f"models[{i}]: {exc}", field=entry.get("name", f"models[{i}]")) from exc
    return ModelCatalog(models=tuple(specs))


def load_model_specs(source: str | Path | IO[str]) -> ModelCatalog:
    """Load a model spec file from a path or an open text stream."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    return parse_model_specs(text)


def bundled_spec_path() -> Path:
    """Filesystem path of the shipped Qwen3 spec file."""
    return Path(str(resources.files("memplan").joinpath("data", BUNDLED_SPEC_NAME)))


def load_bundled_models() -> ModelCatalog:
    return parse_model_specs(
        resources.files("memplan").joinpath("data", BUNDLED_SPEC_NAME).read_text(encoding="utf-8")
    )


__all__ = [
    "SCHEMA_VERSION",
    "ModelCatalog",
    "parse_model_specs",
    "load_model_specs",
    "bundled_spec_path",
    "load_bundled_models",
]
