"""Command-line front door: memory reports, frontier export, planning, estimation, serving.

Exit codes: 0 success, 1 domain error (bad data, unknown model, infeasible
budget), 2 usage error (bad flags, group size beyond the pool). Domain
errors print a single machine-parseable line to stderr:

    error[CODE]: message

Output format is ``--format text`` (human) or ``--format machine`` (one
stable, versioned JSON document on stdout; see docs/cli.md).
"""

from __future__ import annotations

import argparse
import json
import os
import signal
import sys
import threading
from typing import Any, Sequence

from . import __version__
from .api import build_state, make_server
from .catalog import ModelCatalog, bundled_spec_path, load_model_specs
from .documents import (
    envelope,
    memory_breakdown_doc,
    composition_row_doc,
    recommendation_doc,
)
from .errors import DomainError, MemplanError
from .frontier import write_frontier_csv
from .measurements import Exact, MonteCarlo, load_measurements, load_sample_pools, maj_at_g
from .memory import InferenceConfig, WeightQuantSpec, format_bytes_line, strategy_from_key
from .planner import (
    frontier_with_composition,
    plan,
    score_dataset,
)

SPEC_PATH_ENV = "MEMPLAN_MODEL_SPECS"
EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _load_models(args: argparse.Namespace) -> ModelCatalog:
    path = args.models_file or os.environ.get(SPEC_PATH_ENV) or bundled_spec_path()
    return load_model_specs(path)


def _emit_machine(command: str, result: Any) -> None:
    doc = envelope(result=result)
    doc["command"] = command
    print(json.dumps(doc))


def _usage_error(parser: argparse.ArgumentParser, message: str) -> int:
    print(f"error[USAGE]: {message}", file=sys.stderr)
    parser.print_usage(sys.stderr)
    return EXIT_USAGE


def cmd_memory(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    models = _load_models(args)
    config = InferenceConfig(
        model=args.model,
        weight_quant=WeightQuantSpec(precision_bits=args.wbits, group_size=args.wgroup),
        kv_strategy=strategy_from_key(args.kv),
        token_budget=args.tokens,
        group_size=args.group,
        amortization_batch=args.batch,
    )
    doc = memory_breakdown_doc(config, models)
    if args.format == "machine":
        _emit_machine("memory", doc)
    else:
        print(f"model      {doc['model']}")
        print(f"config     {doc['config_key']}")
        print(f"weights    {format_bytes_line(doc['weights_bytes'])}")
        print(f"kv_cache   {format_bytes_line(doc['kv_bytes'])}")
        print(f"total      {format_bytes_line(doc['total_bytes'])}")
        print(f"amortized  {format_bytes_line(doc['amortized_bytes'])}")
    return EXIT_OK


def _filtered_dataset(args: argparse.Namespace):
    dataset = load_measurements(args.dataset)
    return dataset.filter(
        models=args.model or None,
        weight_bits=args.wbits or None,
        strategy_keys=args.kv or None,
        group_sizes=args.group or None,
        min_token_budget=args.min_tokens,
        max_token_budget=args.max_tokens,
    )


def cmd_frontier(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    models = _load_models(args)
    dataset = _filtered_dataset(args)
    if len(dataset) == 0:
        raise DomainError("filters excluded every measurement")
    if args.axis == "throughput":
        scored = []
        for s, rec in zip(score_dataset(dataset, models, "memory", args.batch), dataset):
            if rec.throughput_rps is None:
                raise DomainError(f"record {rec.key} has no throughput_rps for the throughput axis")
            scored.append(type(s)(config=s.config, cost=1.0 / rec.throughput_rps, accuracy=s.accuracy))
        unit = "inverse_rps"
    else:
        scored = score_dataset(dataset, models, args.axis, args.batch)
        unit = "bytes" if args.axis == "memory" else "seconds"
    _, rows = frontier_with_composition(scored, models, unit)
    if args.format == "machine":
        _emit_machine("frontier", {"unit": unit, "points": [composition_row_doc(r) for r in rows]})
    else:
        out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
        try:
            write_frontier_csv(rows, out)
        finally:
            if args.output:
                out.close()
    return EXIT_OK


def cmd_plan(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if (args.budget_bytes is None) == (args.budget_gib is None):
        return _usage_error(parser, "exactly one of --budget-bytes / --budget-gib is required")
    budget = args.budget_bytes if args.budget_bytes is not None else int(args.budget_gib * 1024**3)
    models = _load_models(args)
    dataset = load_measurements(args.dataset)
    rec = plan(
        budget,
        dataset,
        models,
        objective=args.objective,
        amortization_batch=args.batch,
        task_type=args.task_type,
    )
    doc = recommendation_doc(rec)
    if args.format == "machine":
        _emit_machine("plan", doc)
        return EXIT_OK
    print(f"budget     {format_bytes_line(int(budget)) if args.objective == 'memory' else budget}")
    print(f"chosen     {doc['chosen']['config_key']}")
    print(f"accuracy   {doc['achieved_accuracy']:.4f}")
    if args.objective == "memory":
        print(f"cost       {format_bytes_line(int(doc['cost']))}")
    else:
        print(f"cost       {doc['cost']:.3f} s")
    print(f"memory     {format_bytes_line(doc['memory_bytes'])}")
    for a in doc["annotations"]:
        mark = "x" if a["triggered"] else " "
        print(f"rule {a['rule_id']} [{mark}] {a['explanation']}")
    print("frontier neighborhood (cost accuracy config):")
    for p in doc["frontier_neighborhood"]:
        cost = f"{p['cost']:.0f}" if rec.cost_unit == "bytes" else f"{p['cost']:.3f}"
        print(f"  {cost:>16s} {p['accuracy']:.4f} {p['config_key']}")
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    pools = load_sample_pools(args.pools)
    if not pools:
        raise DomainError(f"no pools found in {args.pools}")
    smallest = min(pool.size for pool in pools)
    if args.group > smallest:
        return _usage_error(
            parser, f"--group {args.group} exceeds the smallest pool size {smallest}"
        )
    if args.method == "exact":
        method: Exact | MonteCarlo = Exact(tie_policy=args.tie_policy)
    else:
        if args.seed is None:
            return _usage_error(parser, "--seed is required with --method monte-carlo")
        method = MonteCarlo(seed=args.seed, resamples=args.resamples, tie_policy=args.tie_policy)
    per_instance = [
        {"instance_id": pool.instance_id, "estimate": maj_at_g(pool, args.group, method)}
        for pool in pools
    ]
    mean = sum(e["estimate"] for e in per_instance) / len(per_instance)
    if args.format == "machine":
        _emit_machine(
            "estimate",
            {
                "group_size": args.group,
                "method": {"kind": args.method.replace("-", "_"), "tie_policy": args.tie_policy},
                "per_instance": per_instance,
                "mean": mean,
            },
        )
    else:
        for entry in per_instance:
            print(f"{entry['instance_id']}  maj@{args.group} = {entry['estimate']:.6f}")
        print(f"mean maj@{args.group} over {len(per_instance)} instances: {mean:.6f}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    host, _, port_s = args.bind.rpartition(":")
    if not host or not port_s.isdigit():
        return _usage_error(parser, f"--bind must look like HOST:PORT, got {args.bind!r}")
    models_path = args.models_file or os.environ.get(SPEC_PATH_ENV) or bundled_spec_path()
    state = build_state(models_path, args.dataset, args.pools, cors=args.cors)
    try:
        server = make_server(state, host, int(port_s))
    except OSError as exc:
        print(f"error[BIND_FAILED]: cannot bind {args.bind}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    # shutdown() blocks until the serve loop exits, so it must not run on the
    # main thread the signal interrupted.
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: threading.Thread(target=server.shutdown).start())
    print(f"serving on http://{host}:{server.server_address[1]}", flush=True)
    server.serve_forever()
    server.server_close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memplan",
        description="Memory-budget planning for reasoning-LLM deployments.",
    )
    parser.add_argument("--version", action="version", version=f"memplan {__version__}")
    parser.add_argument(
        "--models-file",
        help=f"model spec file (default: ${SPEC_PATH_ENV} or the bundled Qwen3 specs)",
    )
    parser.add_argument("--format", choices=("text", "machine"), default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("memory", help="byte-exact footprint report for one configuration")
    p.add_argument("--model", required=True)
    p.add_argument("--wbits", type=int, choices=(4, 8, 16), required=True)
    p.add_argument("--wgroup", type=int, default=128, help="weight quantization group size")
    p.add_argument("--kv", default="full", help="kv strategy key: full | evict:N | quant:B[:gN:sN:zN:rN]")
    p.add_argument("--tokens", type=int, default=0, help="cached tokens (prompt + generation)")
    p.add_argument("--group", type=int, default=1, help="sampling group size G")
    p.add_argument("--batch", type=int, default=1, help="amortization batch B")
    p.set_defaults(func=cmd_memory)

    p = sub.add_parser("frontier", help="export the Pareto frontier of a measurement file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--axis", choices=("memory", "latency", "throughput"), default="memory")
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--model", action="append", help="repeatable model filter")
    p.add_argument("--wbits", action="append", type=int, help="repeatable precision filter")
    p.add_argument("--kv", action="append", help="repeatable kv strategy key filter")
    p.add_argument("--group", action="append", type=int, help="repeatable group size filter")
    p.add_argument("--min-tokens", type=int)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--output", help="write CSV here instead of stdout (text mode)")
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("plan", help="best accuracy under a byte (or latency) budget")
    p.add_argument("--dataset", required=True)
    p.add_argument("--budget-bytes", type=int)
    p.add_argument("--budget-gib", type=float)
    p.add_argument("--objective", choices=("memory", "latency"), default="memory")
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--task-type", choices=("math", "knowledge"))
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("estimate", help="majority-vote accuracy from sample pools")
    p.add_argument("--pools", required=True)
    p.add_argument("--group", type=int, required=True, help="vote group size G")
    p.add_argument("--method", choices=("exact", "monte-carlo"), default="exact")
    p.add_argument("--resamples", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--tie-policy",
        choices=("uniform_random", "first_sampled", "count_as_wrong"),
        default="uniform_random",
    )
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--bind", default="127.0.0.1:8080")
    p.add_argument("--dataset", help="measurement file to serve")
    p.add_argument("--pools", help="sample-pool file to serve")
    p.add_argument("--cors", action="store_true", help="permissive cross-origin headers for local UI work")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except MemplanError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except FileNotFoundError as exc:
        print(f"error[FILE_NOT_FOUND]: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
