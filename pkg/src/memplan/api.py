"""Stateless HTTP facade over the memory model, frontier, planner, and estimators.

Specs, measurements, and sample pools are loaded once at startup and are
immutable while serving; every handler is a read-only function of that
state plus the request body, so concurrent requests need no coordination.
A reload requires a restart by design.

Endpoints, error codes, and body schemas are documented in docs/api.md.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Callable

from .catalog import ModelCatalog, load_model_specs
from .documents import (
    composition_row_doc,
    envelope,
    memory_breakdown_doc,
    model_spec_doc,
    recommendation_doc,
)
from .errors import DomainError, MemplanError, ModelNotFoundError
from .measurements import (
    Exact,
    MeasurementDataset,
    MonteCarlo,
    Sample,
    SamplePool,
    load_measurements,
    load_sample_pools,
    maj_at_g,
)
from .memory import InferenceConfig, WeightQuantSpec, strategy_from_doc
from .planner import (
    COST_UNITS,
    RuleThresholds,
    frontier_with_composition,
    plan,
    score_dataset,
)

log = logging.getLogger(__name__)

HTTP_STATUS_BY_CODE = {
    "MODEL_NOT_FOUND": 404,
    "NOT_FOUND": 404,
    "METHOD_NOT_ALLOWED": 405,
    "INFEASIBLE_BUDGET": 409,
    "INTERNAL": 500,
}
FRONTIER_AXES = ("memory", "latency", "throughput")


@dataclass(frozen=True)
class ApiState:
    """Everything a handler may read; built once at startup."""

    models: ModelCatalog
    dataset: MeasurementDataset | None = None
    pools: tuple[SamplePool, ...] | None = None
    thresholds: RuleThresholds | None = None
    cors: bool = False

    def require_dataset(self) -> MeasurementDataset:
        if self.dataset is None:
            raise DomainError("no measurement dataset loaded; start the service with one")
        return self.dataset


def build_state(
    models_path: str | Path,
    dataset_path: str | Path | None = None,
    pools_path: str | Path | None = None,
    cors: bool = False,
) -> ApiState:
    """Load startup state; any malformed input raises and the service must not start."""
    models = load_model_specs(models_path)
    dataset = load_measurements(dataset_path) if dataset_path else None
    pools = tuple(load_sample_pools(pools_path)) if pools_path else None
    thresholds = None
    try:
        thresholds = RuleThresholds.from_catalog(models)
    except ModelNotFoundError:
        pass  # custom spec files without the reference models still serve /memory
    return ApiState(models=models, dataset=dataset, pools=pools, thresholds=thresholds, cors=cors)


def _need(doc: dict, name: str, types: tuple | type, default: Any = ...) -> Any:
    if name not in doc:
        if default is not ...:
            return default
        raise DomainError(f"missing required field {name!r}")
    value = doc[name]
    if not isinstance(value, types) or isinstance(value, bool):
        raise DomainError(f"field {name!r}: expected {types}, got {type(value).__name__}")
    return value


def _config_from_doc(doc: dict) -> InferenceConfig:
    quant = WeightQuantSpec(
        precision_bits=_need(doc, "weight_precision_bits", int),
        group_size=_need(doc, "weight_group_size", int, 128),
    )
    strategy = strategy_from_doc(_need(doc, "kv_strategy", dict, {"kind": "full"}))
    return InferenceConfig(
        model=_need(doc, "model", str),
        weight_quant=quant,
        kv_strategy=strategy,
        token_budget=_need(doc, "token_budget", int, 0),
        group_size=_need(doc, "group_size", int, 1),
        amortization_batch=_need(doc, "amortization_batch", int, 1),
    )


def handle_models(state: ApiState, _body: dict) -> dict:
    return {"models": [model_spec_doc(s) for s in state.models]}


def handle_memory(state: ApiState, body: dict) -> dict:
    config = _config_from_doc(body)
    return memory_breakdown_doc(config, state.models)


def _apply_filters(dataset: MeasurementDataset, filters: dict) -> MeasurementDataset:
    return dataset.filter(
        models=filters.get("models"),
        weight_bits=filters.get("weight_precision_bits"),
        strategy_keys=filters.get("kv_strategies"),
        group_sizes=filters.get("group_sizes"),
        min_token_budget=filters.get("min_token_budget"),
        max_token_budget=filters.get("max_token_budget"),
    )


def handle_frontier(state: ApiState, body: dict) -> dict:
    dataset = state.require_dataset()
    axis = _need(body, "axis", str, "memory")
    if axis not in FRONTIER_AXES:
        raise DomainError(f"axis must be one of {FRONTIER_AXES}, got {axis!r}")
    batch = _need(body, "amortization_batch", int, 1)
    filters = _need(body, "filters", dict, {})
    filtered = _apply_filters(dataset, filters)
    if len(filtered) == 0:
        raise DomainError("filters excluded every measurement")
    if axis == "throughput":
        scored = score_dataset(filtered, state.models, "memory", batch)
        by_key = {r.key: r for r in filtered}
        rescored = []
        for s in scored:
            rec = by_key[
                (
                    s.config.model,
                    s.config.weight_quant.precision_bits,
                    s.config.kv_strategy.key,
                    s.config.token_budget,
                    s.config.group_size,
                )
            ]
            if rec.throughput_rps is None:
                raise DomainError(f"record {rec.key} has no throughput_rps for the throughput axis")
            rescored.append(type(s)(config=s.config, cost=1.0 / rec.throughput_rps, accuracy=s.accuracy))
        scored = rescored
        unit = COST_UNITS["throughput"]
    else:
        scored = score_dataset(filtered, state.models, axis, batch)
        unit = COST_UNITS[axis]
    _, rows = frontier_with_composition(scored, state.models, unit)
    return {"unit": unit, "points": [composition_row_doc(r) for r in rows]}


def handle_plan(state: ApiState, body: dict) -> dict:
    dataset = state.require_dataset()
    budget = _need(body, "budget_bytes", (int, float))
    objective = _need(body, "objective", str, "memory")
    batch = _need(body, "amortization_batch", int, 1)
    task_type = body.get("task_type")
    filters = _need(body, "filters", dict, {})
    filtered = _apply_filters(dataset, filters) if filters else dataset
    rec = plan(
        budget,
        filtered,
        state.models,
        objective=objective,
        amortization_batch=batch,
        task_type=task_type,
        thresholds=state.thresholds,
    )
    return recommendation_doc(rec)


def _pools_from_body(state: ApiState, body: dict) -> tuple[SamplePool, ...]:
    if "pools" in body:
        raw = _need(body, "pools", list)
        pools = []
        for i, doc in enumerate(raw):
            if not isinstance(doc, dict):
                raise DomainError(f"pools[{i}] must be an object")
            try:
                samples = tuple(
                    Sample(answer_key=s["answer_key"], correct=s["correct"])
                    for s in _need(doc, "samples", list)
                )
            except (KeyError, TypeError) as exc:
                raise DomainError(
                    f"pools[{i}].samples entries must be {{'answer_key': str, 'correct': bool}}"
                ) from exc
            pools.append(SamplePool(instance_id=_need(doc, "instance_id", str), samples=samples))
        return tuple(pools)
    if state.pools:
        return state.pools
    raise DomainError("no pools supplied inline and none loaded at startup")


def handle_estimate(state: ApiState, body: dict) -> dict:
    pools = _pools_from_body(state, body)
    g = _need(body, "group_size", int)
    method_doc = _need(body, "method", dict, {"kind": "exact"})
    kind = method_doc.get("kind", "exact")
    if kind == "exact":
        method: Exact | MonteCarlo = Exact(tie_policy=method_doc.get("tie_policy", "uniform_random"))
    elif kind == "monte_carlo":
        if "seed" not in method_doc:
            raise DomainError("monte_carlo method requires a seed")
        method = MonteCarlo(
            seed=method_doc["seed"],
            resamples=method_doc.get("resamples", 100_000),
            tie_policy=method_doc.get("tie_policy", "uniform_random"),
        )
    else:
        raise DomainError(f"method kind must be 'exact' or 'monte_carlo', got {kind!r}")
    per_instance = [
        {"instance_id": pool.instance_id, "estimate": maj_at_g(pool, g, method)} for pool in pools
    ]
    mean = sum(e["estimate"] for e in per_instance) / len(per_instance)
    return {
        "group_size": g,
        "method": {"kind": kind, "tie_policy": method.tie_policy},
        "per_instance": per_instance,
        "mean": mean,
    }


ROUTES: dict[tuple[str, str], Callable[[ApiState, dict], dict]] = {
    ("GET", "/health"): lambda state, _body: {"status": "ok", "models": len(state.models)},
    ("GET", "/models"): handle_models,
    ("POST", "/memory"): handle_memory,
    ("POST", "/frontier"): handle_frontier,
    ("POST", "/plan"): handle_plan,
    ("POST", "/estimate"): handle_estimate,
}


class ApiHandler(BaseHTTPRequestHandler):
    state: ApiState  # set on the subclass created by make_server
    server_version = "memplan"

    def log_message(self, fmt: str, *args: Any) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        if self.state.cors:
            self._cors_headers()
        self.end_headers()
        self.wfile.write(body)

    def _cors_headers(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _error(self, status: int, code: str, message: str, details: dict | None = None) -> None:
        err: dict[str, Any] = {"code": code, "message": message}
        if details:
            err["details"] = details
        self._send(status, envelope(error=err))

    def _dispatch(self, method: str) -> None:
        route = ROUTES.get((method, self.path))
        if route is None:
            if any(path == self.path for m, path in ROUTES):
                self._error(405, "METHOD_NOT_ALLOWED", f"{method} not allowed on {self.path}")
            else:
                self._error(404, "NOT_FOUND", f"no route {self.path}")
            return
        body: dict = {}
        if method == "POST":
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if raw:
                try:
                    body = json.loads(raw.decode("utf-8"))
                except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                    self._error(400, "PARSE_ERROR", f"invalid JSON body: {exc}")
                    return
                if not isinstance(body, dict):
                    self._error(400, "PARSE_ERROR", "request body must be a JSON object")
                    return
        try:
            result = route(self.state, body)
        except MemplanError as exc:
            status = HTTP_STATUS_BY_CODE.get(exc.code, 400)
            details = None
            if hasattr(exc, "cheapest_cost"):
                details = {
                    "budget": exc.budget,  # type: ignore[attr-defined]
                    "cheapest_cost": exc.cheapest_cost,  # type: ignore[attr-defined]
                    "cheapest_config_key": exc.cheapest_config_key,  # type: ignore[attr-defined]
                }
            self._error(status, exc.code, str(exc), details)
            return
        except Exception as exc:  # pragma: no cover - defensive
            log.exception("handler failure on %s %s", method, self.path)
            self._error(500, "INTERNAL", f"{type(exc).__name__}: {exc}")
            return
        self._send(200, envelope(result=result))

    def do_GET(self) -> None:
        self._dispatch("GET")

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_OPTIONS(self) -> None:
        self.send_response(204)
        if self.state.cors:
            self._cors_headers()
        self.end_headers()


def make_server(state: ApiState, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Bind a threading HTTP server; ``port=0`` picks an ephemeral port."""
    handler = type("BoundApiHandler", (ApiHandler,), {"state": state})
    return ThreadingHTTPServer((host, port), handler)


def start_in_thread(state: ApiState, host: str = "127.0.0.1", port: int = 0) -> tuple[ThreadingHTTPServer, threading.Thread]:
    """Convenience for tests and embedding: serve on a daemon thread."""
    server = make_server(state, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread


__all__ = [
    "ApiState",
    "ApiHandler",
    "build_state",
    "make_server",
    "start_in_thread",
    "HTTP_STATUS_BY_CODE",
    "FRONTIER_AXES",
]
