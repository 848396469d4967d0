"""Static non-adaptive dictionary: keys matched into their own neighbor cells.

Every key ``x`` is stored, together with its value, in one of the cells
``Γ(x, 0..t-1)``. A lookup reads all ``t`` of those cells, whatever they
contain, so the probe sequence depends on ``x`` alone.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from ._prf import SEED_BYTES, derive_seed
from .errors import BadMagicError, BuildError, CorruptRecordError, TruncatedError
from .expander import SPEC_RECORD_SIZE, ExpanderSpec
from .matching import hall_witness, hopcroft_karp
from .params import ProblemShape, dict_degree

__all__ = [
    "Cell",
    "Dictionary",
    "Lookup",
    "ProbeTrace",
    "build",
    "build_with_spec",
    "DICT_MAGIC",
    "DEFAULT_MAX_ATTEMPTS",
]

DICT_MAGIC = b"NADCT1"
DICT_VERSION = 1
_HEADER = struct.Struct("<6sBQQQQ")
DEFAULT_MAX_ATTEMPTS = 16

Cell = tuple[int, int] | None
"""A memory cell: ``None`` (Nil) or a stored ``(key, value)`` pair."""


class ProbeTrace(NamedTuple):
    """Cell addresses read by one query, in read order."""

    addresses: tuple[int, ...]

    @property
    def count(self) -> int:
        return len(self.addresses)


class Lookup(NamedTuple):
    value: int | None
    trace: ProbeTrace


def _field_bytes(u: int) -> int:
    return ((u - 1).bit_length() + 7) // 8


@dataclass(frozen=True)
class Dictionary:
    spec: ExpanderSpec
    cells: tuple[Cell, ...]
    n: int
    build_attempts: int = 1

    @property
    def u(self) -> int:
        return self.spec.u

    @property
    def s(self) -> int:
        return self.spec.s

    @property
    def t(self) -> int:
        return self.spec.t

    def query(self, x: int) -> Lookup:
        """Probe the ``t`` neighbor cells of ``x`` and return its value (or None)."""
        addresses = tuple(self.spec.neighbors(x))
        cells = self.cells
        value = None
        for cell in [cells[a] for a in addresses]:
            if cell is not None and cell[0] == x:
                value = cell[1]
        return Lookup(value, ProbeTrace(addresses))

    def get(self, x: int) -> int | None:
        return self.query(x).value

    def __contains__(self, x: int) -> bool:
        return self.get(x) is not None

    def items(self) -> list[tuple[int, int]]:
        return sorted(c for c in self.cells if c is not None)

    def audit(self) -> None:
        """Raise AssertionError unless the stored layout is a valid matching."""
        occupied = [(addr, c) for addr, c in enumerate(self.cells) if c is not None]
        assert len(self.cells) == self.s, "cell count differs from s"
        assert len(occupied) == self.n, f"{len(occupied)} occupied cells, expected {self.n}"
        keys = [c[0] for _, c in occupied]
        assert len(set(keys)) == len(keys), "a key occupies two cells"
        for addr, (key, value) in occupied:
            assert 0 <= key < self.u and 0 <= value < self.u, f"pair {(key, value)} out of range"
            assert addr in self.spec.neighbors(key), f"key {key} stored outside its neighborhood"

    def to_bytes(self) -> bytes:
        fb = _field_bytes(self.u)
        out = bytearray(_HEADER.pack(DICT_MAGIC, DICT_VERSION, self.u, self.s, self.t, self.n))
        out += self.spec.to_bytes()
        empty = bytes(1 + 2 * fb)
        for cell in self.cells:
            if cell is None:
                out += empty
            else:
                out.append(1)
                out += cell[0].to_bytes(fb, "little")
                out += cell[1].to_bytes(fb, "little")
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Dictionary":
        if data[: len(DICT_MAGIC)] != DICT_MAGIC:
            raise BadMagicError("dictionary record does not start with NADCT1")
        if len(data) < _HEADER.size + SPEC_RECORD_SIZE:
            raise TruncatedError("dictionary header is truncated")
        _, version, u, s, t, n = _HEADER.unpack_from(data)
        if version != DICT_VERSION:
            raise CorruptRecordError(f"unsupported dictionary version {version}")
        spec = ExpanderSpec.from_bytes(data[_HEADER.size : _HEADER.size + SPEC_RECORD_SIZE])
        if (spec.u, spec.s, spec.t) != (u, s, t):
            raise CorruptRecordError("header (u, s, t) disagrees with the expander record")
        fb = _field_bytes(u)
        width = 1 + 2 * fb
        body = memoryview(data)[_HEADER.size + SPEC_RECORD_SIZE :]
        if len(body) < s * width:
            raise TruncatedError(f"expected {s} cells of {width} bytes, got {len(body)} bytes")
        if len(body) > s * width:
            raise CorruptRecordError("trailing bytes after the last cell")
        cells: list[Cell] = []
        for addr in range(s):
            rec = body[addr * width : (addr + 1) * width]
            tag = rec[0]
            key = int.from_bytes(rec[1 : 1 + fb], "little")
            value = int.from_bytes(rec[1 + fb :], "little")
            if tag == 0:
                if key or value:
                    raise CorruptRecordError(f"Nil cell {addr} carries a payload")
                cells.append(None)
            elif tag == 1:
                if key >= u:
                    raise CorruptRecordError(f"cell {addr} holds key {key} outside [0, {u})")
                if value >= u:
                    raise CorruptRecordError(f"cell {addr} holds value {value} outside [0, {u})")
                cells.append((key, value))
            else:
                raise CorruptRecordError(f"cell {addr} has unknown tag {tag}")
        d = cls(spec, tuple(cells), n, build_attempts=1)
        try:
            d.audit()
        except AssertionError as exc:
            raise CorruptRecordError(str(exc)) from None
        return d


def _validate_pairs(pairs: Iterable[tuple[int, int]], u: int) -> list[tuple[int, int]]:
    items = sorted((int(k), int(v)) for k, v in pairs)
    for i, (k, v) in enumerate(items):
        if not 0 <= k < u:
            raise ValueError(f"key {k} outside [0, {u})")
        if not 0 <= v < u:
            raise ValueError(f"value {v} of key {k} outside [0, {u})")
        if i and items[i - 1][0] == k:
            raise ValueError(f"duplicate key {k}")
    return items


def _place(items: Sequence[tuple[int, int]], spec: ExpanderSpec) -> tuple[tuple[Cell, ...] | None, frozenset[int] | None]:
    adj = []
    for key, _ in items:
        # keep first occurrence so the try order stays j = 0..t-1
        adj.append(list(dict.fromkeys(spec.neighbors(key))))
    match_l, match_r = hopcroft_karp(adj, spec.s)
    witness = hall_witness(adj, match_l, match_r)
    if witness is not None:
        return None, frozenset(items[i][0] for i in witness)
    cells: list[Cell] = [None] * spec.s
    for (key, value), addr in zip(items, match_l):
        cells[addr] = (key, value)
    return tuple(cells), None


def build_with_spec(pairs: Iterable[tuple[int, int]], spec: ExpanderSpec) -> Dictionary:
    """Store ``pairs`` using the given graph, or raise BuildError with a Hall violator."""
    items = _validate_pairs(pairs, spec.u)
    cells, witness = _place(items, spec)
    if cells is None:
        raise BuildError(
            f"no key-perfect matching: keys {sorted(witness)} have fewer neighbor cells than members",
            attempts=1,
            witness=witness,
        )
    return Dictionary(spec, cells, len(items), build_attempts=1)


def build(
    pairs: Iterable[tuple[int, int]],
    u: int,
    s: int,
    t: int | None = None,
    *,
    seed: bytes | None = None,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> Dictionary:
    """Build a dictionary over ``s`` cells, resampling the graph on failure.

    The first attempt uses ``seed`` itself; attempt ``i > 1`` uses a seed
    derived from it, so a fixed ``seed`` gives a reproducible build. ``t``
    defaults to ``dict_degree``.
    """
    items = _validate_pairs(pairs, u)
    n = len(items)
    if s < 2 * n:
        raise ValueError(f"requires s >= 2n (s={s}, n={n})")
    if t is None:
        t = dict_degree(ProblemShape(u, max(n, 1), s))
    if seed is None:
        seed = os.urandom(SEED_BYTES)
    witness = None
    for attempt in range(1, max_attempts + 1):
        spec = ExpanderSpec(u, s, t, seed if attempt == 1 else derive_seed(seed, "resample", attempt))
        cells, witness = _place(items, spec)
        if cells is not None:
            return Dictionary(spec, cells, n, build_attempts=attempt)
    raise BuildError(
        f"build failed after {max_attempts} attempts; last Hall violator {sorted(witness)}",
        attempts=max_attempts,
        witness=witness,
    )
