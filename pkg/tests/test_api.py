"""HTTP service: endpoint behavior, library parity, statelessness, CORS."""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import pytest

from memplan.api import build_state, start_in_thread
from memplan.catalog import bundled_spec_path
from memplan.documents import memory_breakdown_doc, recommendation_doc
from memplan.errors import ParseError
from memplan.measurements import Exact, dump_measurements, dump_sample_pools, maj_at_g
from memplan.memory import InferenceConfig, WeightQuantSpec
from memplan.planner import RuleThresholds, plan

from conftest import build_synthetic_dataset, make_pool_fixture


@pytest.fixture(scope="module")
def data_files(tmp_path_factory, models):
    root = tmp_path_factory.mktemp("api-data")
    measurements = root / "measurements.jsonl"
    dataset = build_synthetic_dataset(models, with_latency=True)
    with open(measurements, "w", encoding="utf-8") as fh:
        dump_measurements(dataset, fh)
    pools = root / "pools.jsonl"
    with open(pools, "w", encoding="utf-8") as fh:
        dump_sample_pools(make_pool_fixture(n_pools=6), fh)
    return {"measurements": str(measurements), "pools": str(pools), "dataset": dataset}


@pytest.fixture(scope="module")
def server(data_files):
    state = build_state(
        bundled_spec_path(), data_files["measurements"], data_files["pools"], cors=True
    )
    srv, _thread = start_in_thread(state)
    base = f"http://127.0.0.1:{srv.server_address[1]}"
    yield base
    srv.shutdown()
    srv.server_close()


def call(base: str, method: str, path: str, body: dict | None = None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(
        base + path, data=data, method=method, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read()), dict(resp.headers)
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read()), dict(exc.headers)


class TestBasics:
    def test_health_after_start(self, server):
        status, doc, _ = call(server, "GET", "/health")
        assert status == 200 and doc["ok"] and doc["result"]["status"] == "ok"

    def test_models_lists_six_fixtures(self, server):
        status, doc, _ = call(server, "GET", "/models")
        assert status == 200
        names = [m["name"] for m in doc["result"]["models"]]
        assert len(names) == 6 and "Qwen3-32B" in names

    def test_unknown_route_404(self, server):
        status, doc, _ = call(server, "GET", "/nope")
        assert status == 404 and doc["error"]["code"] == "NOT_FOUND"

    def test_wrong_method_405(self, server):
        status, doc, _ = call(server, "GET", "/memory")
        assert status == 405 and doc["error"]["code"] == "METHOD_NOT_ALLOWED"

    def test_cors_headers(self, server):
        status, _, headers = call(server, "GET", "/health")
        assert headers.get("Access-Control-Allow-Origin") == "*"

    def test_malformed_body(self, server):
        req = urllib.request.Request(server + "/memory", data=b"{broken", method="POST")
        with pytest.raises(urllib.error.HTTPError) as exc:
            urllib.request.urlopen(req)
        assert exc.value.code == 400
        assert json.loads(exc.value.read())["error"]["code"] == "PARSE_ERROR"

    def test_empty_spec_file_serves_empty_list(self, tmp_path):
        spec = tmp_path / "empty.json"
        spec.write_text('{"schema_version": 1, "models": []}')
        state = build_state(spec)
        srv, _ = start_in_thread(state)
        try:
            status, doc, _ = call(f"http://127.0.0.1:{srv.server_address[1]}", "GET", "/models")
            assert status == 200 and doc["result"]["models"] == []
        finally:
            srv.shutdown()
            srv.server_close()

    def test_malformed_spec_refuses_to_start(self, tmp_path):
        spec = tmp_path / "bad.json"
        spec.write_text('{"schema_version": 7}')
        with pytest.raises(ParseError):
            build_state(spec)


class TestMemoryEndpoint:
    def test_table_case(self, server):
        status, doc, _ = call(
            server,
            "POST",
            "/memory",
            {
                "model": "Qwen3-32B",
                "weight_precision_bits": 8,
                "kv_strategy": {"kind": "full"},
                "token_budget": 30_000,
                "group_size": 16,
            },
        )
        assert status == 200
        assert doc["result"]["kv_gib"] == "117.19"

    def test_zero_budget_zero_kv(self, server):
        status, doc, _ = call(
            server,
            "POST",
            "/memory",
            {"model": "Qwen3-4B", "weight_precision_bits": 4, "token_budget": 0},
        )
        assert status == 200 and doc["result"]["kv_bytes"] == 0

    def test_unknown_model_code(self, server):
        status, doc, _ = call(
            server, "POST", "/memory", {"model": "Qwen3-99B", "weight_precision_bits": 4}
        )
        assert status == 404 and doc["error"]["code"] == "MODEL_NOT_FOUND"

    def test_parity_case_table(self, server, models):
        cases = [
            ("Qwen3-0.6B", 16, {"kind": "full"}, 2000, 1, 1),
            ("Qwen3-4B", 4, {"kind": "full"}, 30_000, 1, 1),
            ("Qwen3-8B", 8, {"kind": "evict", "retain_tokens": 4096}, 30_000, 4, 2),
            ("Qwen3-14B", 8, {"kind": "quant", "precision_bits": 4}, 18_000, 8, 16),
        ]
        from memplan.memory import strategy_from_doc

        for model, bits, strat, budget, g, batch in cases:
            status, doc, _ = call(
                server,
                "POST",
                "/memory",
                {
                    "model": model,
                    "weight_precision_bits": bits,
                    "kv_strategy": strat,
                    "token_budget": budget,
                    "group_size": g,
                    "amortization_batch": batch,
                },
            )
            assert status == 200
            config = InferenceConfig(
                model=model,
                weight_quant=WeightQuantSpec(bits),
                kv_strategy=strategy_from_doc(strat),
                token_budget=budget,
                group_size=g,
                amortization_batch=batch,
            )
            expected = json.loads(json.dumps(memory_breakdown_doc(config, models)))
            assert doc["result"] == expected


class TestFrontierEndpoint:
    def test_mirrors_dataset(self, server, data_files):
        status, doc, _ = call(server, "POST", "/frontier", {"axis": "memory"})
        assert status == 200
        points = doc["result"]["points"]
        assert doc["result"]["unit"] == "bytes"
        assert len(points) >= 3
        costs = [p["cost"] for p in points]
        assert costs == sorted(costs)

    def test_filters(self, server):
        status, doc, _ = call(
            server,
            "POST",
            "/frontier",
            {"filters": {"models": ["Qwen3-4B"], "weight_precision_bits": [8]}},
        )
        assert status == 200
        assert all(p["model"] == "Qwen3-4B" for p in doc["result"]["points"])

    def test_empty_filter_is_domain_error(self, server):
        status, doc, _ = call(server, "POST", "/frontier", {"filters": {"models": ["NotAModel"]}})
        assert status == 400 and doc["error"]["code"] == "VALIDATION_ERROR"


class TestPlanEndpoint:
    def test_parity_with_library(self, server, models, data_files):
        status, doc, _ = call(
            server, "POST", "/plan", {"budget_bytes": 24 * 2**30, "task_type": "math"}
        )
        assert status == 200
        expected = recommendation_doc(
            plan(
                24 * 2**30,
                data_files["dataset"],
                models,
                task_type="math",
                thresholds=RuleThresholds.from_catalog(models),
            )
        )
        assert doc["result"] == json.loads(json.dumps(expected))

    def test_infeasible_carries_cheapest_hint(self, server):
        status, doc, _ = call(server, "POST", "/plan", {"budget_bytes": 10})
        assert status == 409
        err = doc["error"]
        assert err["code"] == "INFEASIBLE_BUDGET"
        assert err["details"]["cheapest_cost"] > 10
        assert "config_key" in str(err["details"])

    def test_statelessness_identical_concurrent_requests(self, server):
        body = {"budget_bytes": 24 * 2**30}

        def one(_):
            return call(server, "POST", "/plan", body)

        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(one, range(16)))
        bodies = {json.dumps(doc, sort_keys=True) for _, doc, _ in results}
        assert len(bodies) == 1


class TestEstimateEndpoint:
    def test_loaded_pools(self, server):
        status, doc, _ = call(server, "POST", "/estimate", {"group_size": 3})
        assert status == 200
        pools = make_pool_fixture(n_pools=6)
        for entry, pool in zip(doc["result"]["per_instance"], pools):
            assert entry["estimate"] == maj_at_g(pool, 3, Exact())

    def test_inline_pools(self, server):
        body = {
            "group_size": 2,
            "pools": [
                {
                    "instance_id": "x",
                    "samples": [
                        {"answer_key": "a", "correct": True},
                        {"answer_key": "a", "correct": True},
                        {"answer_key": "b", "correct": False},
                    ],
                }
            ],
        }
        status, doc, _ = call(server, "POST", "/estimate", body)
        assert status == 200
        # subsets of size 2: {aa}=1, {ab}x2 ties -> 0.5 each => (1 + 0.5*2)/3
        assert doc["result"]["per_instance"][0]["estimate"] == pytest.approx(2 / 3)

    def test_monte_carlo_needs_seed(self, server):
        status, doc, _ = call(
            server, "POST", "/estimate", {"group_size": 2, "method": {"kind": "monte_carlo"}}
        )
        assert status == 400 and "seed" in doc["error"]["message"]

    def test_g_beyond_pool_domain_error(self, server):
        status, doc, _ = call(server, "POST", "/estimate", {"group_size": 64})
        assert status == 400 and doc["error"]["code"] == "VALIDATION_ERROR"

    def test_malformed_inline_pool_is_400(self, server):
        status, doc, _ = call(
            server,
            "POST",
            "/estimate",
            {"group_size": 1, "pools": [{"instance_id": "x", "samples": [{"oops": 1}]}]},
        )
        assert status == 400 and doc["error"]["code"] == "VALIDATION_ERROR"
