"""Exception taxonomy shared across the library, CLI, and HTTP service.

Every error carries a stable ``code`` string; the HTTP layer and the CLI's
machine output surface these codes verbatim, so they are part of the public
contract (documented in docs/api.md).
"""

from __future__ import annotations


class MemplanError(Exception):
    """Base class for all library errors."""

    code = "INTERNAL"


class DomainError(MemplanError):
    """An argument violates an operation's stated domain."""

    code = "VALIDATION_ERROR"


class RangeError(DomainError):
    """A byte or token count fell outside the representable range."""

    code = "RANGE_ERROR"


class UnitMismatchError(DomainError):
    """Cost points with different units were mixed in one analysis."""

    code = "UNIT_MISMATCH"


class ParseError(MemplanError):
    """A document failed schema validation.

    ``line`` is 1-based for line-delimited inputs; ``field`` names the
    offending field when known.
    """

    code = "PARSE_ERROR"

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"field {field!r}: "
        super().__init__(prefix + message)


class ConflictError(MemplanError):
    """Two records claimed the same configuration key."""

    code = "DUPLICATE_KEY"


class ModelNotFoundError(MemplanError):
    """A configuration referenced a model absent from the loaded specs."""

    code = "MODEL_NOT_FOUND"

    def __init__(self, name: str, known: tuple[str, ...] = ()):
        self.name = name
        self.known = known
        hint = f" (known: {', '.join(known)})" if known else ""
        super().__init__(f"unknown model {name!r}{hint}")


class CapacityError(MemplanError):
    """Exact enumeration was requested beyond the enumeration cap."""

    code = "CAPACITY_EXCEEDED"


class CoverageError(MemplanError):
    """The measurement dataset cannot score part of the requested space."""

    code = "COVERAGE_ERROR"


class InfeasibleBudgetError(MemplanError):
    """No configuration fits under the requested budget.

    Carries the cheapest known configuration so callers can surface
    what the budget would need to be.
    """

    code = "INFEASIBLE_BUDGET"

    def __init__(self, budget: float, cheapest_cost: float, cheapest_config_key: str):
        self.budget = budget
        self.cheapest_cost = cheapest_cost
        self.cheapest_config_key = cheapest_config_key
        super().__init__(
            f"no configuration fits in {budget:.0f}; cheapest is "
            f"{cheapest_config_key} at {cheapest_cost:.0f}"
        )
