"""Measurement ingestion and majority-vote accuracy estimation.

Two line-delimited JSON inputs (schemas in docs/file-formats.md):

* measurement files — one record per (model, weight precision, KV strategy,
  token budget, group size) with measured accuracy and optional latency /
  throughput;
* sample-pool files — one record per benchmark instance holding the ordered
  per-sample outcomes a harness produced.

``maj_at_g`` estimates majority-vote accuracy at group size G by subsampling
the fixed pool without replacement. That is an estimator for regenerating G
fresh samples, not a reproduction of it.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .errors import CapacityError, ConflictError, DomainError, ParseError
from .memory import (
    SUPPORTED_WEIGHT_BITS,
    KvCacheStrategy,
    strategy_from_doc,
    strategy_to_doc,
)

SCHEMA_VERSION = 1
EXACT_ENUMERATION_CAP = 1_000_000
INVALID_ANSWER = "INVALID"  # harness marker for unparseable votes; never correct

TIE_POLICIES = ("uniform_random", "first_sampled", "count_as_wrong")


@dataclass(frozen=True)
class Sample:
    answer_key: str
    correct: bool

    def __post_init__(self) -> None:
        if not self.answer_key:
            raise DomainError("answer_key must be non-empty")
        if self.answer_key == INVALID_ANSWER and self.correct:
            raise DomainError(f"{INVALID_ANSWER!r} answers can never be correct")


@dataclass(frozen=True)
class SamplePool:
    """Ordered generation outcomes for one benchmark instance."""

    instance_id: str
    samples: tuple[Sample, ...]

    def __post_init__(self) -> None:
        if not self.instance_id:
            raise DomainError("instance_id must be non-empty")
        if not self.samples:
            raise DomainError(f"pool {self.instance_id!r} has no samples")
        correct_keys = {s.answer_key for s in self.samples if s.correct}
        if len(correct_keys) > 1:
            raise DomainError(
                f"pool {self.instance_id!r} marks multiple answers correct: {sorted(correct_keys)}"
            )

    @property
    def size(self) -> int:
        return len(self.samples)

    @property
    def correct_key(self) -> str | None:
        for s in self.samples:
            if s.correct:
                return s.answer_key
        return None


@dataclass(frozen=True)
class Exact:
    """Exact subset enumeration (permitted while C(S, G) stays enumerable)."""

    tie_policy: str = "uniform_random"

    def __post_init__(self) -> None:
        _check_tie_policy(self.tie_policy)


@dataclass(frozen=True)
class MonteCarlo:
    """Seeded subset resampling; bit-reproducible for a given seed."""

    seed: int
    resamples: int = 100_000
    tie_policy: str = "uniform_random"

    def __post_init__(self) -> None:
        _check_tie_policy(self.tie_policy)
        if self.resamples <= 0:
            raise DomainError("resamples must be positive")


EstimationMethod = Exact | MonteCarlo


def _check_tie_policy(policy: str) -> None:
    if policy not in TIE_POLICIES:
        raise DomainError(f"tie_policy must be one of {TIE_POLICIES}, got {policy!r}")


def pass_at_1(pool: SamplePool) -> float:
    """Fraction of correct samples in the pool."""
    if pool.size < 1:
        raise DomainError("pool must contain at least one sample")
    return float(Fraction(sum(s.correct for s in pool.samples), pool.size))


def maj_at_g(pool: SamplePool, g: int, method: EstimationMethod = Exact()) -> float:
    """Probability that a uniform size-``g`` subset of the pool votes correctly.

    Votes go to the most frequent answer in the subset; ties among the most
    frequent are broken per the method's tie policy (uniformly at random by
    default, contributing fractional credit in Exact mode).
    """
    if not isinstance(g, int) or isinstance(g, bool) or g < 1:
        raise DomainError(f"group size must be a positive integer, got {g!r}")
    if g > pool.size:
        raise DomainError(f"group size {g} exceeds pool size {pool.size}")
    if isinstance(method, Exact):
        if math.comb(pool.size, g) > EXACT_ENUMERATION_CAP:
            raise CapacityError(
                f"C({pool.size}, {g}) subsets exceed the exact enumeration cap "
                f"of {EXACT_ENUMERATION_CAP}; use the monte_carlo method"
            )
        return float(_exact_maj(pool, g, method.tie_policy))
    return _monte_carlo_maj(pool, g, method)


def _pool_ids(pool: SamplePool) -> tuple[np.ndarray, int, int | None]:
    """Map answers to dense ids; returns (ids per sample, n keys, correct id)."""
    key_ids: dict[str, int] = {}
    ids = []
    for s in pool.samples:
        ids.append(key_ids.setdefault(s.answer_key, len(key_ids)))
    correct = pool.correct_key
    correct_id = key_ids[correct] if correct is not None else None
    return np.asarray(ids, dtype=np.int64), len(key_ids), correct_id


def _exact_maj(pool: SamplePool, g: int, tie_policy: str) -> Fraction:
    ids, n_keys, correct_id = _pool_ids(pool)
    if correct_id is None:
        return Fraction(0)
    if tie_policy == "first_sampled":
        return _exact_first_sampled(ids, n_keys, correct_id, g)
    # The vote outcome depends only on per-answer draw counts, so enumerate
    # draw-count compositions weighted hypergeometrically instead of raw
    # subsets; equivalent, and far fewer leaves when answers repeat.
    counts = np.bincount(ids, minlength=n_keys).tolist()
    suffix = [0] * (n_keys + 1)
    for i in reversed(range(n_keys)):
        suffix[i] = suffix[i + 1] + counts[i]
    total = math.comb(pool.size, g)
    acc = Fraction(0)

    def descend(i: int, remaining: int, weight: int, best: int, n_tied: int, correct_tied: bool) -> None:
        nonlocal acc
        if i == n_keys:
            if remaining == 0 and correct_tied:
                if tie_policy == "count_as_wrong":
                    if n_tied == 1:
                        acc += weight
                else:
                    acc += Fraction(weight, n_tied)
            return
        lo = max(0, remaining - suffix[i + 1])
        hi = min(counts[i], remaining)
        for draw in range(lo, hi + 1):
            w = weight * math.comb(counts[i], draw)
            if draw > best:
                descend(i + 1, remaining - draw, w, draw, 1, i == correct_id)
            elif draw == best and draw > 0:
                descend(i + 1, remaining - draw, w, best, n_tied + 1, correct_tied or i == correct_id)
            else:
                descend(i + 1, remaining - draw, w, best, n_tied, correct_tied)

    descend(0, g, 1, 0, 0, False)
    return acc / total


def _exact_first_sampled(ids: np.ndarray, n_keys: int, correct_id: int, g: int) -> Fraction:
    # Earliest drawn sample among the tied answers decides, so the outcome
    # depends on which indices were drawn; enumerate subsets directly.
    wins = 0
    id_list = ids.tolist()
    for combo in combinations(range(len(id_list)), g):
        tally = Counter(id_list[i] for i in combo)
        best = max(tally.values())
        tied = {k for k, v in tally.items() if v == best}
        if len(tied) == 1:
            winner = next(iter(tied))
        else:
            winner = next(id_list[i] for i in combo if id_list[i] in tied)
        wins += winner == correct_id
    return Fraction(wins, math.comb(len(id_list), g))


def _monte_carlo_maj(pool: SamplePool, g: int, method: MonteCarlo) -> float:
    ids, n_keys, correct_id = _pool_ids(pool)
    if correct_id is None:
        return 0.0
    rng = np.random.default_rng(method.seed)
    r = method.resamples
    # First g positions of uniform random permutations = uniform subsets.
    order = np.argsort(rng.random((r, pool.size)), axis=1)
    picked = order[:, :g]
    votes = ids[picked]
    rows = np.repeat(np.arange(r), g)
    counts = np.bincount(rows * n_keys + votes.ravel(), minlength=r * n_keys).reshape(r, n_keys)
    max_counts = counts.max(axis=1)
    if method.tie_policy == "uniform_random":
        # iid noise < 1 promotes a uniformly random member of the tied set.
        winner = (counts + rng.random(counts.shape)).argmax(axis=1)
        successes = winner == correct_id
    elif method.tie_policy == "count_as_wrong":
        successes = (counts[:, correct_id] == max_counts) & (
            (counts == max_counts[:, None]).sum(axis=1) == 1
        )
    else:  # first_sampled
        first_idx = np.full((r, n_keys), pool.size, dtype=np.int64)
        np.minimum.at(first_idx, (rows, votes.ravel()), picked.ravel())
        masked = np.where(counts == max_counts[:, None], first_idx, pool.size + 1)
        successes = masked.argmin(axis=1) == correct_id
    return float(successes.mean())


@dataclass(frozen=True)
class MeasurementRecord:
    """One measured configuration: accuracy plus optional speed axes."""

    model: str
    weight_precision_bits: int
    kv_strategy: KvCacheStrategy
    token_budget: int
    group_size: int
    accuracy: float
    latency_seconds: float | None = None
    throughput_rps: float | None = None
    raw: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.weight_precision_bits not in SUPPORTED_WEIGHT_BITS:
            raise DomainError(
                f"weight_precision_bits must be one of {SUPPORTED_WEIGHT_BITS}, "
                f"got {self.weight_precision_bits}"
            )
        if not isinstance(self.token_budget, int) or self.token_budget < 0:
            raise DomainError(f"token_budget must be a non-negative integer, got {self.token_budget!r}")
        if not isinstance(self.group_size, int) or self.group_size < 1:
            raise DomainError(f"group_size must be a positive integer, got {self.group_size!r}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise DomainError(f"accuracy must be within [0, 1], got {self.accuracy}")
        if self.latency_seconds is not None and not self.latency_seconds > 0:
            raise DomainError(f"latency_seconds must be positive, got {self.latency_seconds}")
        if self.throughput_rps is not None and not self.throughput_rps > 0:
            raise DomainError(f"throughput_rps must be positive, got {self.throughput_rps}")

    @property
    def key(self) -> tuple[str, int, str, int, int]:
        return (
            self.model,
            self.weight_precision_bits,
            self.kv_strategy.key,
            self.token_budget,
            self.group_size,
        )

    def to_doc(self) -> dict:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "model": self.model,
            "weight_precision_bits": self.weight_precision_bits,
            "kv_strategy": strategy_to_doc(self.kv_strategy),
            "token_budget": self.token_budget,
            "group_size": self.group_size,
            "accuracy": self.accuracy,
        }
        if self.latency_seconds is not None:
            doc["latency_seconds"] = self.latency_seconds
        if self.throughput_rps is not None:
            doc["throughput_rps"] = self.throughput_rps
        return doc

    def to_line(self) -> str:
        """Serialized form; the original line verbatim for loaded records."""
        if self.raw is not None:
            return self.raw
        return json.dumps(self.to_doc(), separators=(", ", ": "))


class MeasurementDataset:
    """Immutable, key-unique collection of measurement records."""

    def __init__(self, records: Iterable[MeasurementRecord]):
        recs = tuple(records)
        seen: dict[tuple, int] = {}
        for i, rec in enumerate(recs):
            if rec.key in seen:
                raise ConflictError(f"duplicate measurement key {rec.key} (records {seen[rec.key]} and {i})")
            seen[rec.key] = i
        self._records = recs
        self._by_key = {rec.key: rec for rec in recs}

    @property
    def records(self) -> tuple[MeasurementRecord, ...]:
        return self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[MeasurementRecord]:
        return iter(self._records)

    def get(self, key: tuple[str, int, str, int, int]) -> MeasurementRecord | None:
        return self._by_key.get(key)

    def filter(
        self,
        models: Sequence[str] | None = None,
        weight_bits: Sequence[int] | None = None,
        strategy_keys: Sequence[str] | None = None,
        group_sizes: Sequence[int] | None = None,
        min_token_budget: int | None = None,
        max_token_budget: int | None = None,
    ) -> "MeasurementDataset":
        kept = [
            r
            for r in self._records
            if (models is None or r.model in models)
            and (weight_bits is None or r.weight_precision_bits in weight_bits)
            and (strategy_keys is None or r.kv_strategy.key in strategy_keys)
            and (group_sizes is None or r.group_size in group_sizes)
            and (min_token_budget is None or r.token_budget >= min_token_budget)
            and (max_token_budget is None or r.token_budget <= max_token_budget)
        ]
        return MeasurementDataset(kept)

    def families(self) -> list[tuple[str, int, str, int]]:
        """Distinct (model, weight bits, strategy key, group size) tuples."""
        return sorted({(r.model, r.weight_precision_bits, r.kv_strategy.key, r.group_size) for r in self})

    def curve(
        self, model: str, weight_bits: int, strategy_key: str, group_size: int, value: str = "accuracy"
    ) -> list[tuple[int, float]]:
        """(token_budget, value) pairs for one family, sorted by token budget."""
        points = []
        for r in self._records:
            if (r.model, r.weight_precision_bits, r.kv_strategy.key, r.group_size) == (
                model,
                weight_bits,
                strategy_key,
                group_size,
            ):
                v = getattr(r, value)
                if v is not None:
                    points.append((r.token_budget, float(v)))
        points.sort()
        return points


def _parse_record(doc: dict, line_no: int, raw: str) -> MeasurementRecord:
    if not isinstance(doc, dict):
        raise ParseError("record must be a JSON object", line=line_no)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(
            f"unsupported schema_version {doc.get('schema_version')!r}",
            line=line_no,
            field="schema_version",
        )
    def need(name: str, types: tuple | type):
        if name not in doc:
            raise ParseError("missing required field", line=line_no, field=name)
        value = doc[name]
        if not isinstance(value, types) or isinstance(value, bool):
            raise ParseError(f"expected {types}, got {type(value).__name__}", line=line_no, field=name)
        return value

    model = need("model", str)
    wbits = need("weight_precision_bits", int)
    token_budget = need("token_budget", int)
    group_size = need("group_size", int)
    accuracy = float(need("accuracy", (int, float)))
    try:
        strategy = strategy_from_doc(need("kv_strategy", dict))
    except DomainError as exc:
        raise ParseError(str(exc), line=line_no, field="kv_strategy") from exc
    optional: dict[str, float | None] = {}
    for name in ("latency_seconds", "throughput_rps"):
        if name in doc and doc[name] is not None:
            value = doc[name]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ParseError(f"expected number, got {type(value).__name__}", line=line_no, field=name)
            optional[name] = float(value)
    try:
        return MeasurementRecord(
            model=model,
            weight_precision_bits=wbits,
            kv_strategy=strategy,
            token_budget=token_budget,
            group_size=group_size,
            accuracy=accuracy,
            latency_seconds=optional.get("latency_seconds"),
            throughput_rps=optional.get("throughput_rps"),
            raw=raw,
        )
    except DomainError as exc:
        field_name = str(exc).split(" ", 1)[0]
        raise ParseError(str(exc), line=line_no, field=field_name) from exc


def _iter_lines(source: str | Path | IO[str]) -> Iterator[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def load_measurements(source: str | Path | IO[str]) -> MeasurementDataset:
    """Load a line-delimited measurement file; blank lines are permitted."""
    records = []
    keys_to_line: dict[tuple, int] = {}
    for line_no, line in enumerate(_iter_lines(source), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}", line=line_no) from exc
        rec = _parse_record(doc, line_no, stripped)
        if rec.key in keys_to_line:
            raise ConflictError(
                f"line {line_no}: duplicate measurement key {rec.key} (first seen line {keys_to_line[rec.key]})"
            )
        keys_to_line[rec.key] = line_no
        records.append(rec)
    return MeasurementDataset(records)


def dump_measurements(dataset: MeasurementDataset, stream: IO[str]) -> None:
    """Write records back out; loaded records re-export byte-identically."""
    for rec in dataset:
        stream.write(rec.to_line() + "\n")


def load_sample_pools(source: str | Path | IO[str]) -> list[SamplePool]:
    """Load a line-delimited sample-pool file (one instance per line)."""
    pools: list[SamplePool] = []
    seen: dict[str, int] = {}
    for line_no, line in enumerate(_iter_lines(source), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            doc = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}", line=line_no) from exc
        if not isinstance(doc, dict):
            raise ParseError("record must be a JSON object", line=line_no)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ParseError(
                f"unsupported schema_version {doc.get('schema_version')!r}",
                line=line_no,
                field="schema_version",
            )
        instance_id = doc.get("instance_id")
        if not isinstance(instance_id, str) or not instance_id:
            raise ParseError("instance_id must be a non-empty string", line=line_no, field="instance_id")
        raw_samples = doc.get("samples")
        if not isinstance(raw_samples, list) or not raw_samples:
            raise ParseError("samples must be a non-empty list", line=line_no, field="samples")
        samples = []
        for j, s in enumerate(raw_samples):
            if not isinstance(s, dict) or not isinstance(s.get("answer_key"), str) or not isinstance(
                s.get("correct"), bool
            ):
                raise ParseError(
                    f"samples[{j}] must be {{'answer_key': str, 'correct': bool}}",
                    line=line_no,
                    field="samples",
                )
            try:
                samples.append(Sample(answer_key=s["answer_key"], correct=s["correct"]))
            except DomainError as exc:
                raise ParseError(str(exc), line=line_no, field="samples") from exc
        if instance_id in seen:
            raise ConflictError(
                f"line {line_no}: duplicate instance_id {instance_id!r} (first seen line {seen[instance_id]})"
            )
        seen[instance_id] = line_no
        try:
            pools.append(SamplePool(instance_id=instance_id, samples=tuple(samples)))
        except DomainError as exc:
            raise ParseError(str(exc), line=line_no, field="samples") from exc
    return pools


def dump_sample_pools(pools: Sequence[SamplePool], stream: IO[str]) -> None:
    for pool in pools:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "instance_id": pool.instance_id,
            "samples": [{"answer_key": s.answer_key, "correct": s.correct} for s in pool.samples],
        }
        stream.write(json.dumps(doc, separators=(", ", ": ")) + "\n")


def derive_record(
    pools: Sequence[SamplePool],
    g: int,
    *,
    model: str,
    weight_precision_bits: int,
    kv_strategy: KvCacheStrategy,
    token_budget: int,
    method: EstimationMethod = Exact(),
    latency_seconds: float | None = None,
    throughput_rps: float | None = None,
) -> MeasurementRecord:
    """Aggregate per-instance pools into one measurement record at group size ``g``.

    Accuracy is the mean over instances of maj@G (pass@1 when G is 1).
    """
    if not pools:
        raise DomainError("at least one pool is required")
    sizes = {pool.size for pool in pools}
    if len(sizes) > 1:
        raise DomainError(f"pools must share one sample count, got sizes {sorted(sizes)}")
    per_instance = [maj_at_g(pool, g, method) for pool in pools]
    return MeasurementRecord(
        model=model,
        weight_precision_bits=weight_precision_bits,
        kv_strategy=kv_strategy,
        token_budget=token_budget,
        group_size=g,
        accuracy=float(sum(per_instance) / len(per_instance)),
        latency_seconds=latency_seconds,
        throughput_rps=throughput_rps,
    )


__all__ = [
    "SCHEMA_VERSION",
    "EXACT_ENUMERATION_CAP",
    "INVALID_ANSWER",
    "TIE_POLICIES",
    "Sample",
    "SamplePool",
    "Exact",
    "MonteCarlo",
    "EstimationMethod",
    "pass_at_1",
    "maj_at_g",
    "MeasurementRecord",
    "MeasurementDataset",
    "load_measurements",
    "dump_measurements",
    "load_sample_pools",
    "dump_sample_pools",
    "derive_record",
]
