"""Pareto dominance and frontier extraction over (cost, accuracy) points.

Cost can be any declared unit (bytes, seconds, or inverse requests/s); one
analysis must stick to a single unit. Extraction is a sort-and-sweep; exact
(cost, accuracy) duplicates are retained and flagged co-optimal.
"""

from __future__ import annotations

import csv
from bisect import bisect_left
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from .errors import DomainError, MemplanError, UnitMismatchError

UNITS = ("bytes", "seconds", "inverse_rps")


@dataclass(frozen=True)
class CostPoint:
    cost: float
    accuracy: float
    unit: str = "bytes"
    config_key: str = ""

    def __post_init__(self) -> None:
        if self.unit not in UNITS:
            raise DomainError(f"unit must be one of {UNITS}, got {self.unit!r}")
        if not self.cost >= 0:
            raise DomainError(f"cost must be non-negative, got {self.cost}")
        if not 0.0 <= self.accuracy <= 1.0:
            raise DomainError(f"accuracy must be within [0, 1], got {self.accuracy}")


def dominates(a: CostPoint, b: CostPoint) -> bool:
    """True iff ``a`` is no worse on both axes and strictly better on one."""
    if a.unit != b.unit:
        raise UnitMismatchError(f"cannot compare {a.unit!r} with {b.unit!r}")
    if a.cost > b.cost or a.accuracy < b.accuracy:
        return False
    return a.cost < b.cost or a.accuracy > b.accuracy


@dataclass(frozen=True)
class Frontier:
    """Non-dominated points ordered by strictly increasing cost and accuracy.

    ``co_optimal`` marks members that share their exact (cost, accuracy)
    pair with another member.
    """

    points: tuple[CostPoint, ...]
    co_optimal: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.points) != len(self.co_optimal):
            raise DomainError("points and co_optimal flags must align")
        for prev, cur in zip(self.points, self.points[1:]):
            same_pair = prev.cost == cur.cost and prev.accuracy == cur.accuracy
            if not same_pair and not (prev.cost < cur.cost and prev.accuracy < cur.accuracy):
                raise DomainError(
                    f"frontier order violated between {prev.config_key or prev} and {cur.config_key or cur}"
                )

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def unit(self) -> str:
        return self.points[0].unit if self.points else "bytes"

    def slice_around(self, cost: float, below: int = 5, above: int = 2) -> "Frontier":
        """Contiguous members nearest ``cost``: up to ``below`` at or under it, ``above`` over it."""
        costs = [p.cost for p in self.points]
        split = bisect_left(costs, cost)
        while split < len(costs) and costs[split] <= cost:
            split += 1
        lo = max(0, split - below)
        hi = min(len(costs), split + above)
        return Frontier(points=self.points[lo:hi], co_optimal=self.co_optimal[lo:hi])


def pareto_frontier(points: Iterable[CostPoint]) -> Frontier:
    """Extract the non-dominated subset by sort-and-sweep.

    Points are sorted by (cost ascending, accuracy descending); a point
    survives when its accuracy strictly exceeds the running maximum, or when
    it exactly repeats the previously kept (cost, accuracy) pair (co-optimal
    duplicate).
    """
    pts = list(points)
    if not pts:
        raise DomainError("cannot take the frontier of an empty point set")
    units = {p.unit for p in pts}
    if len(units) > 1:
        raise UnitMismatchError(f"mixed units in one analysis: {sorted(units)}")
    pts.sort(key=lambda p: (p.cost, -p.accuracy))
    kept: list[CostPoint] = []
    flags: list[bool] = []
    best_accuracy = -1.0
    for p in pts:
        if p.accuracy > best_accuracy:
            kept.append(p)
            flags.append(False)
            best_accuracy = p.accuracy
        elif kept and p.cost == kept[-1].cost and p.accuracy == kept[-1].accuracy:
            flags[-1] = True
            kept.append(p)
            flags.append(True)
    return Frontier(points=tuple(kept), co_optimal=tuple(flags))


@dataclass(frozen=True)
class InterpolatedAccuracy:
    value: float
    clamped: bool


def interpolate_accuracy(
    curve: Sequence[tuple[float, float]], token_budget: float
) -> InterpolatedAccuracy:
    """Piecewise-linear accuracy on a measured (token budget, accuracy) grid.

    Queries outside the grid clamp to the nearest endpoint and are flagged;
    no extrapolation is ever performed.
    """
    if not curve:
        raise DomainError("interpolation requires a non-empty curve")
    budgets = [t for t, _ in curve]
    if any(b >= a for b, a in zip(budgets, budgets[1:])):
        raise DomainError("curve token budgets must be strictly increasing")
    if token_budget <= budgets[0]:
        return InterpolatedAccuracy(curve[0][1], clamped=token_budget < budgets[0])
    if token_budget >= budgets[-1]:
        return InterpolatedAccuracy(curve[-1][1], clamped=token_budget > budgets[-1])
    hi = bisect_left(budgets, token_budget)
    t0, a0 = curve[hi - 1]
    t1, a1 = curve[hi]
    if token_budget == t1:
        return InterpolatedAccuracy(a1, clamped=False)
    frac = (token_budget - t0) / (t1 - t0)
    return InterpolatedAccuracy(a0 + frac * (a1 - a0), clamped=False)


@dataclass(frozen=True)
class CompositionRow:
    """Frontier member projected onto the attributes behind its cost."""

    cost: float
    unit: str
    accuracy: float
    config_key: str
    model: str
    weight_precision_bits: int
    kv_strategy_key: str
    token_budget: int
    group_size: int
    effective_size_bytes: int
    co_optimal: bool


@dataclass(frozen=True)
class ConfigAttributes:
    """Resolved attributes for one config_key, supplied by the planner layer."""

    model: str
    weight_precision_bits: int
    kv_strategy_key: str
    token_budget: int
    group_size: int
    effective_size_bytes: int


class ConfigKeyError(MemplanError):
    code = "CONFIG_NOT_FOUND"


def frontier_composition(
    frontier: Frontier, attributes: Mapping[str, ConfigAttributes]
) -> list[CompositionRow]:
    """Project each frontier member onto its configuration attributes, by cost order."""
    rows = []
    for point, co_opt in zip(frontier.points, frontier.co_optimal):
        attr = attributes.get(point.config_key)
        if attr is None:
            raise ConfigKeyError(f"config_key {point.config_key!r} did not resolve")
        rows.append(
            CompositionRow(
                cost=point.cost,
                unit=point.unit,
                accuracy=point.accuracy,
                config_key=point.config_key,
                model=attr.model,
                weight_precision_bits=attr.weight_precision_bits,
                kv_strategy_key=attr.kv_strategy_key,
                token_budget=attr.token_budget,
                group_size=attr.group_size,
                effective_size_bytes=attr.effective_size_bytes,
                co_optimal=co_opt,
            )
        )
    return rows


# Export column order is frozen; documented in docs/file-formats.md.
FRONTIER_COLUMNS = (
    "cost",
    "unit",
    "accuracy",
    "config_key",
    "model",
    "weight_precision_bits",
    "kv_strategy",
    "token_budget",
    "group_size",
    "effective_size_bytes",
    "co_optimal",
)


def _num(value: float) -> str:
    """Exact round-trip numeric text; integral values render without '.0'."""
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def write_frontier_csv(rows: Sequence[CompositionRow], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(FRONTIER_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                _num(row.cost),
                row.unit,
                _num(row.accuracy),
                row.config_key,
                row.model,
                row.weight_precision_bits,
                row.kv_strategy_key,
                row.token_budget,
                row.group_size,
                row.effective_size_bytes,
                "true" if row.co_optimal else "false",
            ]
        )


__all__ = [
    "UNITS",
    "CostPoint",
    "Frontier",
    "dominates",
    "pareto_frontier",
    "InterpolatedAccuracy",
    "interpolate_accuracy",
    "CompositionRow",
    "ConfigAttributes",
    "ConfigKeyError",
    "frontier_composition",
    "FRONTIER_COLUMNS",
    "write_frontier_csv",
]
