"""Seeded left-regular bipartite graphs and brute-force expansion checks.

A graph maps every left vertex ``x`` in ``[0, u)`` to an ordered list of ``t``
right vertices in ``[0, s)``. Repeats inside one list are allowed.
"""

from __future__ import annotations

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, NamedTuple, Protocol, Sequence

from ._prf import SEED_BYTES, KeyedStream
from ._search import PartitionResult, reduce_partitions
from .errors import BadMagicError, CorruptRecordError, SamplingError, TruncatedError

__all__ = [
    "BipartiteGraph",
    "ExpanderSpec",
    "TabulatedGraph",
    "ExpansionReport",
    "Sample",
    "neighbors",
    "neighbor_set",
    "verify_expansion",
    "verify_expansion_naive",
    "sample_verified",
    "SPEC_MAGIC",
    "SPEC_RECORD_SIZE",
]

SPEC_MAGIC = b"NAEXP1"
_SPEC_HEADER = struct.Struct("<6sQQQ")
SPEC_RECORD_SIZE = _SPEC_HEADER.size + SEED_BYTES

_GAMMA_DOMAIN = b"nonadaptive/gamma\x00"

DEFAULT_BUDGET = 10_000_000


class BipartiteGraph(Protocol):
    u: int
    s: int
    t: int

    def neighbors(self, x: int) -> list[int]: ...


def _check_key(g: BipartiteGraph, x: int) -> None:
    if not 0 <= x < g.u:
        raise ValueError(f"key {x} outside [0, {g.u})")


@dataclass(frozen=True)
class ExpanderSpec:
    """Pseudorandom graph ``Γ(x, j)`` keyed by a 32-byte seed."""

    u: int
    s: int
    t: int
    seed: bytes
    _stream: KeyedStream = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.u < 1 or self.s < 1 or self.t < 1:
            raise ValueError(f"u, s, t must be >= 1 (got u={self.u}, s={self.s}, t={self.t})")
        if len(self.seed) != SEED_BYTES:
            raise ValueError(f"seed must be {SEED_BYTES} bytes, got {len(self.seed)}")
        object.__setattr__(self, "_stream", KeyedStream(_GAMMA_DOMAIN, bytes(self.seed), self.s))

    @classmethod
    def random(cls, u: int, s: int, t: int) -> "ExpanderSpec":
        return cls(u, s, t, os.urandom(SEED_BYTES))

    def neighbors(self, x: int) -> list[int]:
        """``[Γ(x, 0), ..., Γ(x, t-1)]``."""
        if not 0 <= x < self.u:
            raise ValueError(f"key {x} outside [0, {self.u})")
        return self._stream.draw(x, self.t)

    def neighbor_set(self, keys: Iterable[int]) -> set[int]:
        return neighbor_set(self, keys)

    def tabulate(self) -> "TabulatedGraph":
        return TabulatedGraph(self.u, self.s, self.t, tuple(tuple(self.neighbors(x)) for x in range(self.u)))

    def to_bytes(self) -> bytes:
        return _SPEC_HEADER.pack(SPEC_MAGIC, self.u, self.s, self.t) + self.seed

    @classmethod
    def from_bytes(cls, data: bytes) -> "ExpanderSpec":
        if len(data) < len(SPEC_MAGIC) or data[: len(SPEC_MAGIC)] != SPEC_MAGIC:
            raise BadMagicError("expander record does not start with NAEXP1")
        if len(data) < SPEC_RECORD_SIZE:
            raise TruncatedError(f"expander record needs {SPEC_RECORD_SIZE} bytes, got {len(data)}")
        _, u, s, t = _SPEC_HEADER.unpack_from(data)
        seed = bytes(data[_SPEC_HEADER.size : SPEC_RECORD_SIZE])
        try:
            return cls(u, s, t, seed)
        except ValueError as exc:
            raise CorruptRecordError(str(exc)) from None


@dataclass(frozen=True)
class TabulatedGraph:
    """Explicit neighbor table; used for synthetic and adversarial instances."""

    u: int
    s: int
    t: int
    table: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.table) != self.u:
            raise ValueError(f"table has {len(self.table)} rows, expected u={self.u}")
        for x, row in enumerate(self.table):
            if len(row) != self.t:
                raise ValueError(f"row {x} has {len(row)} entries, expected t={self.t}")
            if any(not 0 <= y < self.s for y in row):
                raise ValueError(f"row {x} has an address outside [0, {self.s})")

    def neighbors(self, x: int) -> list[int]:
        _check_key(self, x)
        return list(self.table[x])

    def neighbor_set(self, keys: Iterable[int]) -> set[int]:
        return neighbor_set(self, keys)


def neighbors(graph: BipartiteGraph, x: int) -> list[int]:
    return graph.neighbors(x)


def neighbor_set(graph: BipartiteGraph, keys: Iterable[int]) -> set[int]:
    """``Γ(S)``, the union of the neighbor lists of ``keys``."""
    out: set[int] = set()
    for x in keys:
        out.update(graph.neighbors(x))
    return out


class ExpansionReport(NamedTuple):
    k_max: int
    a: int
    holds: bool
    witness: tuple[int, ...] | None
    subsets_checked: int


def _masks(graph: BipartiteGraph) -> list[int]:
    # bit positions index only the addresses that occur, so width <= u*t
    position: dict[int, int] = {}
    masks = []
    for x in range(graph.u):
        m = 0
        for y in graph.neighbors(x):
            m |= 1 << position.setdefault(y, len(position))
        masks.append(m)
    return masks


def _search_from(masks: Sequence[int], first: int, k_max: int, a: int, cap: int) -> PartitionResult:
    """Depth-first walk over subsets whose smallest element is ``first``.

    Preorder DFS visits subsets in lexicographic order of their sorted tuples,
    so the first violation met is the smallest one in this partition. A subtree
    is skipped once ``|Γ(S)|`` already covers ``a`` times the largest subset the
    subtree can reach, because ``Γ`` only grows under supersets.
    """
    u = len(masks)
    count = 0
    path = [first]

    def visit(mask: int, last: int) -> tuple[int, ...] | None:
        nonlocal count
        count += 1
        if count > cap:
            raise _CapHit
        size = len(path)
        covered = mask.bit_count()
        if covered < a * size:
            return tuple(path)
        reachable = min(k_max, size + (u - 1 - last))
        if covered >= a * reachable:
            return None
        for nxt in range(last + 1, u):
            path.append(nxt)
            found = visit(mask | masks[nxt], nxt)
            path.pop()
            if found is not None:
                return found
        return None

    try:
        witness = visit(masks[first], first)
    except _CapHit:
        return PartitionResult(count, None, exceeded=True)
    return PartitionResult(count, witness, exceeded=False)


class _CapHit(Exception):
    pass


def verify_expansion(
    graph: BipartiteGraph,
    k_max: int,
    a: int = 1,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> ExpansionReport:
    """Check ``|Γ(S)| >= a |S|`` for every ``S`` with ``1 <= |S| <= k_max``.

    The witness, if any, is the lexicographically smallest violating subset.
    ``subsets_checked`` counts visited subsets and does not depend on
    ``workers``. Raises BudgetExceededError rather than returning a partial
    answer when more than ``budget`` subsets would be visited.
    """
    if a not in (1, 2):
        raise ValueError(f"expansion factor must be 1 or 2, got {a}")
    if not 0 <= k_max <= graph.u:
        raise ValueError(f"k_max must lie in [0, u={graph.u}], got {k_max}")
    if k_max == 0:
        return ExpansionReport(0, a, True, None, 0)
    masks = _masks(graph)

    def run(first: int) -> PartitionResult:
        return _search_from(masks, first, k_max, a, budget)

    firsts = range(graph.u)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = pool.map(run, firsts)
            count, witness = reduce_partitions(results, budget)
    else:
        count, witness = reduce_partitions((run(f) for f in firsts), budget)
    return ExpansionReport(k_max, a, witness is None, witness, count)


def verify_expansion_naive(graph: BipartiteGraph, k_max: int, a: int = 1) -> ExpansionReport:
    """Reference check with no pruning: every subset up to ``k_max`` is tested."""
    nbrs = [set(graph.neighbors(x)) for x in range(graph.u)]
    violators = []
    checked = 0
    for k in range(1, k_max + 1):
        for subset in combinations(range(graph.u), k):
            checked += 1
            if len(set().union(*(nbrs[x] for x in subset))) < a * k:
                violators.append(subset)
    witness = min(violators) if violators else None
    return ExpansionReport(k_max, a, witness is None, witness, checked)


class Sample(NamedTuple):
    spec: ExpanderSpec
    attempts: int
    report: ExpansionReport


def sample_verified(
    u: int,
    s: int,
    t: int,
    k_max: int,
    a: int = 1,
    max_attempts: int = 16,
    *,
    seeds: Iterable[bytes] | None = None,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> Sample:
    """Draw seeds until the graph passes ``verify_expansion``.

    ``seeds`` supplies candidate seeds in order (defaults to ``os.urandom``).
    """
    seed_iter = iter(seeds) if seeds is not None else None
    report = None
    for attempt in range(1, max_attempts + 1):
        seed = next(seed_iter) if seed_iter is not None else os.urandom(SEED_BYTES)
        spec = ExpanderSpec(u, s, t, seed)
        report = verify_expansion(spec, k_max, a, budget=budget, workers=workers)
        if report.holds:
            return Sample(spec, attempt, report)
    raise SamplingError(
        f"no ({k_max}, {a})-expander found in {max_attempts} attempts "
        f"(last witness {report.witness if report else None})",
        attempts=max_attempts,
        check="expansion",
        witness=report.witness if report else None,
    )
