#!/usr/bin/env python3
"""Regenerate the bundled demonstration data files.

The measurement values are synthetic (a smooth, deterministic function of
the configuration axes) so the quickstart commands work offline; they are
placeholders for real harness output, not measurements.

Writes src/memplan/data/sample-measurements.jsonl and sample-pools.jsonl.
"""

from __future__ import annotations

import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from memplan.catalog import load_bundled_models  # noqa: E402
from memplan.measurements import (  # noqa: E402
    MeasurementDataset,
    MeasurementRecord,
    Sample,
    SamplePool,
    dump_measurements,
    dump_sample_pools,
)
from memplan.memory import GIB, WeightQuantSpec, strategy_from_key, weight_memory_bytes  # noqa: E402

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "memplan" / "data"
TOKEN_BUDGETS = (2000, 6000, 10000, 14000, 18000, 22000, 26000, 30000)
STRATEGIES = ("full", "evict:4096", "quant:4:g64:s16:z0:r128")


def accuracy(eff_bytes: int, strategy_key: str, budget: int, group: int) -> float:
    scale = math.log2(eff_bytes / 2**28)
    value = 0.05 + 0.062 * scale + 0.30 * (1 - math.exp(-budget / 11000)) + 0.045 * math.log2(group)
    if strategy_key.startswith("evict:") and budget > 4096:
        value -= 0.015 * math.log2(budget / 4096)
    elif strategy_key.startswith("quant:"):
        value -= 0.012
    return round(min(max(value, 0.0), 0.99), 4)


def main() -> None:
    models = load_bundled_models()
    records = []
    for spec in models:
        for bits in (4, 8, 16):
            eff = weight_memory_bytes(spec, WeightQuantSpec(bits))
            for key in STRATEGIES:
                for budget in TOKEN_BUDGETS:
                    for group in (1, 4, 16):
                        records.append(
                            MeasurementRecord(
                                model=spec.name,
                                weight_precision_bits=bits,
                                kv_strategy=strategy_from_key(key),
                                token_budget=budget,
                                group_size=group,
                                accuracy=accuracy(eff, key, budget, group),
                                latency_seconds=round(0.004 * budget + 1.5 * eff / GIB, 3),
                            )
                        )
    with open(DATA_DIR / "sample-measurements.jsonl", "w", encoding="utf-8") as fh:
        dump_measurements(MeasurementDataset(records), fh)

    rng = random.Random(7)
    pools = []
    for i in range(12):
        size = 8
        keys = ["A", "B", "C"]
        correct = rng.choice(keys)
        n_correct = rng.randint(0, size)
        draws = [correct] * n_correct + [rng.choice([k for k in keys if k != correct]) for _ in range(size - n_correct)]
        rng.shuffle(draws)
        pools.append(
            SamplePool(
                instance_id=f"demo-{i:02d}",
                samples=tuple(Sample(k, k == correct and n_correct > 0) for k in draws),
            )
        )
    with open(DATA_DIR / "sample-pools.jsonl", "w", encoding="utf-8") as fh:
        dump_sample_pools(pools, fh)
    print(f"wrote {len(records)} measurement records and {len(pools)} pools under {DATA_DIR}")


if __name__ == "__main__":
    main()
