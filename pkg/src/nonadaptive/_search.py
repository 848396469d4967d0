"""Deterministic reduction over lexicographically ordered search partitions."""

from __future__ import annotations

from typing import Any, Iterable, NamedTuple

from .errors import BudgetExceededError


class PartitionResult(NamedTuple):
    count: int
    witness: Any
    exceeded: bool


def reduce_partitions(results: Iterable[PartitionResult], budget: int) -> tuple[int, Any]:
    """Combine per-partition results as if the partitions had run in sequence.

    Partitions must be given in enumeration order; each one stops at its own
    first witness. The total is the count up to and including the first
    witness overall, so it does not depend on how the work was scheduled.
    """
    total = 0
    for res in results:
        total += res.count
        if res.exceeded or total > budget:
            raise BudgetExceededError(budget)
        if res.witness is not None:
            return total, res.witness
    return total, None
