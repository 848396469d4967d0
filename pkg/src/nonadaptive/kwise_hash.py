"""n-wise independent hashing from a (<=n, 2)-expander and edge weights over F_p.

``h(x) = sum_j Π(x, j) * z[Γ(x, j)] mod p`` where ``z`` holds ``s`` uniform
field elements. Equivalently ``h(x)`` is row ``x`` of the ``u x s`` matrix
``A`` (entry ``(x, y) = sum of Π(x, j) over j with Γ(x, j) = y``) dotted
with ``z``. If every ``n`` rows of ``A`` are linearly independent, any ``n``
hash values are jointly uniform.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Literal, NamedTuple, Protocol, Sequence

import numpy as np
from scipy import stats

from ._prf import SEED_BYTES, KeyedStream, derive_seed
from ._search import PartitionResult, reduce_partitions
from .dictionary import ProbeTrace
from .errors import (
    BadMagicError,
    BudgetExceededError,
    ConfigurationError,
    CorruptRecordError,
    SamplingError,
    TruncatedError,
)
from .expander import (
    DEFAULT_BUDGET,
    SPEC_RECORD_SIZE,
    BipartiteGraph,
    ExpanderSpec,
    verify_expansion,
)
from .params import ProblemShape, field_prime, hash_degree, is_prime

__all__ = [
    "WeightSpec",
    "TabulatedWeights",
    "HashFunction",
    "Evaluation",
    "UsefulnessReport",
    "IndependenceReport",
    "new_hash",
    "sample_useful",
    "rank_mod_p",
    "verify_useful",
    "independence_test",
    "HASH_MAGIC",
]

HASH_MAGIC = b"NAKWH1"
HASH_VERSION = 1
_HEADER = struct.Struct("<6sBQQQQQ")
_PI_DOMAIN = b"nonadaptive/pi\x00"
_Z_DOMAIN = b"nonadaptive/z\x00"
DEFAULT_SAMPLES = 2000


class EdgeWeights(Protocol):
    p: int

    def weights(self, x: int) -> list[int]: ...


@dataclass(frozen=True)
class WeightSpec:
    """Pseudorandom edge weights ``Π(x, j)`` uniform in ``[0, p)``."""

    t: int
    p: int
    seed: bytes
    _stream: KeyedStream = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.seed) != SEED_BYTES:
            raise ValueError(f"weight seed must be {SEED_BYTES} bytes")
        object.__setattr__(self, "_stream", KeyedStream(_PI_DOMAIN, bytes(self.seed), self.p))

    def weights(self, x: int) -> list[int]:
        return self._stream.draw(x, self.t)


@dataclass(frozen=True)
class TabulatedWeights:
    p: int
    table: tuple[tuple[int, ...], ...]

    def weights(self, x: int) -> list[int]:
        return list(self.table[x])


class Evaluation(NamedTuple):
    value: int
    trace: ProbeTrace


def uniform_cells(seed: bytes, s: int, p: int) -> tuple[int, ...]:
    """``s`` uniform residues mod ``p`` expanded from ``seed``."""
    return tuple(KeyedStream(_Z_DOMAIN, seed, p).draw(0, s))


@dataclass(frozen=True)
class HashFunction:
    gamma: BipartiteGraph
    weights: EdgeWeights
    z: tuple[int, ...]
    n: int
    regime: Literal["exhaustive", "sampled", "unverified"] = "unverified"

    def __post_init__(self):
        if len(self.z) != self.gamma.s:
            raise ValueError(f"seed memory has {len(self.z)} cells, expected s={self.gamma.s}")
        p = self.weights.p
        if any(not 0 <= v < p for v in self.z):
            raise ValueError(f"seed memory holds a value outside [0, {p})")

    @property
    def u(self) -> int:
        return self.gamma.u

    @property
    def s(self) -> int:
        return self.gamma.s

    @property
    def t(self) -> int:
        return self.gamma.t

    @property
    def p(self) -> int:
        return self.weights.p

    def evaluate(self, x: int) -> Evaluation:
        addresses = tuple(self.gamma.neighbors(x))
        z = self.z
        cells = [z[a] for a in addresses]
        total = sum(w * c for w, c in zip(self.weights.weights(x), cells))
        return Evaluation(total % self.p, ProbeTrace(addresses))

    def __call__(self, x: int) -> int:
        return self.evaluate(x).value

    def row(self, x: int) -> list[tuple[int, int]]:
        """Non-zero entries of row ``x`` of ``A`` as ``(address, coefficient)``, by address."""
        acc: dict[int, int] = {}
        for y, w in zip(self.gamma.neighbors(x), self.weights.weights(x)):
            acc[y] = (acc.get(y, 0) + w) % self.p
        return sorted((y, c) for y, c in acc.items() if c)

    def with_cells(self, z: Sequence[int]) -> "HashFunction":
        return replace(self, z=tuple(int(v) for v in z))

    def to_bytes(self) -> bytes:
        if not isinstance(self.gamma, ExpanderSpec) or not isinstance(self.weights, WeightSpec):
            raise TypeError("only seeded (ExpanderSpec, WeightSpec) hash functions serialize")
        out = bytearray(_HEADER.pack(HASH_MAGIC, HASH_VERSION, self.u, self.s, self.t, self.n, self.p))
        out += self.gamma.to_bytes()
        out += self.weights.seed
        out += struct.pack(f"<{self.s}Q", *self.z)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "HashFunction":
        if data[: len(HASH_MAGIC)] != HASH_MAGIC:
            raise BadMagicError("hash record does not start with NAKWH1")
        fixed = _HEADER.size + SPEC_RECORD_SIZE + SEED_BYTES
        if len(data) < fixed:
            raise TruncatedError("hash header is truncated")
        _, version, u, s, t, n, p = _HEADER.unpack_from(data)
        if version != HASH_VERSION:
            raise CorruptRecordError(f"unsupported hash version {version}")
        gamma = ExpanderSpec.from_bytes(data[_HEADER.size : _HEADER.size + SPEC_RECORD_SIZE])
        if (gamma.u, gamma.s, gamma.t) != (u, s, t):
            raise CorruptRecordError("header (u, s, t) disagrees with the expander record")
        if not is_prime(p):
            raise CorruptRecordError(f"modulus {p} is not prime")
        pi_seed = bytes(data[_HEADER.size + SPEC_RECORD_SIZE : fixed])
        body = data[fixed:]
        if len(body) < 8 * s:
            raise TruncatedError(f"expected {s} field elements, got {len(body) // 8}")
        if len(body) > 8 * s:
            raise CorruptRecordError("trailing bytes after the seed memory")
        z = struct.unpack(f"<{s}Q", body)
        if any(v >= p for v in z):
            raise CorruptRecordError(f"seed memory holds a residue >= p={p}")
        return cls(gamma, WeightSpec(t, p, pi_seed), z, n, regime="unverified")


def rank_mod_p(rows: Sequence[dict[int, int]], p: int) -> tuple[int, list[int] | None]:
    """Rank of sparse rows over F_p, plus a kernel vector if they are dependent.

    Rows are reduced one at a time against the pivots found so far; the
    first row that reduces to zero yields ``beta`` with ``sum beta_i row_i = 0``,
    scaled so its first non-zero entry is 1.
    """
    k = len(rows)
    pivots: list[tuple[int, dict[int, int], list[int]]] = []
    for i, row in enumerate(rows):
        vec = {c: v % p for c, v in row.items() if v % p}
        comb = [0] * k
        comb[i] = 1
        for col, prow, pcomb in pivots:
            f = vec.get(col)
            if not f:
                continue
            for c, v in prow.items():
                nv = (vec.get(c, 0) - f * v) % p
                if nv:
                    vec[c] = nv
                else:
                    vec.pop(c, None)
            for j in range(k):
                if pcomb[j]:
                    comb[j] = (comb[j] - f * pcomb[j]) % p
        if not vec:
            lead = next(c for c in comb if c)
            inv = pow(lead, -1, p)
            return len(pivots), [c * inv % p for c in comb]
        col = min(vec)
        inv = pow(vec[col], -1, p)
        pivots.append((col, {c: v * inv % p for c, v in vec.items()}, [c * inv % p for c in comb]))
    return len(pivots), None


class UsefulnessReport(NamedTuple):
    n: int
    mode: str
    holds: bool
    subset: tuple[int, ...] | None
    beta: list[int] | None
    subsets_checked: int


def _row_dicts(h: HashFunction) -> list[dict[int, int]]:
    return [dict(h.row(x)) for x in range(h.u)]


def _useful_partition(rows, p: int, n: int, first: int, cap: int) -> PartitionResult:
    u = len(rows)
    count = 0
    for rest in combinations(range(first + 1, u), n - 1):
        count += 1
        if count > cap:
            return PartitionResult(count, None, exceeded=True)
        subset = (first, *rest)
        rank, beta = rank_mod_p([rows[x] for x in subset], p)
        if beta is not None:
            return PartitionResult(count, (subset, beta), exceeded=False)
    return PartitionResult(count, None, exceeded=False)


def verify_useful(
    h: HashFunction,
    n: int | None = None,
    mode: Literal["exhaustive", "sampled"] = "exhaustive",
    budget: int = DEFAULT_BUDGET,
    *,
    samples: int = DEFAULT_SAMPLES,
    rng: np.random.Generator | None = None,
    workers: int = 1,
) -> UsefulnessReport:
    """Check that chosen ``n``-subsets of rows of ``A`` have full rank ``n``.

    Exhaustive mode checks all ``C(u, n)`` subsets in lexicographic order and
    reports the first dependent one; sampled mode checks ``samples`` random
    subsets. Independence of every ``n``-subset implies it for smaller ones.
    """
    n = h.n if n is None else n
    if not 1 <= n <= h.u:
        raise ValueError(f"n must lie in [1, u={h.u}], got {n}")
    p = h.p
    if mode == "exhaustive":
        total = math.comb(h.u, n)
        if total > budget:
            raise BudgetExceededError(budget, what=f"row subsets (C({h.u}, {n}) = {total})")
        rows = _row_dicts(h)

        def run(first: int) -> PartitionResult:
            return _useful_partition(rows, p, n, first, budget)

        firsts = range(h.u - n + 1)
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                count, found = reduce_partitions(pool.map(run, firsts), budget)
        else:
            count, found = reduce_partitions((run(f) for f in firsts), budget)
    elif mode == "sampled":
        rng = rng if rng is not None else np.random.default_rng()
        count, found = 0, None
        for _ in range(samples):
            subset = tuple(sorted(int(x) for x in rng.choice(h.u, size=n, replace=False)))
            count += 1
            _, beta = rank_mod_p([dict(h.row(x)) for x in subset], p)
            if beta is not None:
                found = (subset, beta)
                break
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if found is None:
        return UsefulnessReport(n, mode, True, None, None, count)
    subset, beta = found
    return UsefulnessReport(n, mode, False, subset, beta, count)


def _expansion_sampled(graph: BipartiteGraph, n: int, samples: int, rng: np.random.Generator):
    for _ in range(samples):
        k = int(rng.integers(1, n + 1))
        subset = tuple(sorted(int(x) for x in rng.choice(graph.u, size=k, replace=False)))
        covered = set()
        for x in subset:
            covered.update(graph.neighbors(x))
        if len(covered) < 2 * k:
            return subset
    return None


def _subset_count(u: int, n: int) -> int:
    return sum(math.comb(u, k) for k in range(1, n + 1))


def sample_useful(
    u: int,
    n: int,
    s: int,
    t: int,
    p: int,
    *,
    seed: bytes | None = None,
    max_attempts: int = 16,
    budget: int = DEFAULT_BUDGET,
    samples: int = DEFAULT_SAMPLES,
    workers: int = 1,
) -> tuple[HashFunction, int]:
    """Sample ``(Γ, Π)`` until both checks pass, then fill the seed memory.

    Exhaustive verification is used when ``C(u, <=n)`` fits in ``budget``;
    otherwise ``samples`` random subsets are spot-checked. Returns the function
    and the number of attempts used.
    """
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    seed = os.urandom(SEED_BYTES) if seed is None else seed
    exhaustive = _subset_count(u, n) <= budget
    regime = "exhaustive" if exhaustive else "sampled"
    rng = np.random.default_rng(int.from_bytes(derive_seed(seed, "spot-check"), "little"))
    z = uniform_cells(derive_seed(seed, "z"), s, p)
    check, witness = None, None
    for attempt in range(1, max_attempts + 1):
        gamma = ExpanderSpec(u, s, t, derive_seed(seed, "gamma", attempt))
        if exhaustive:
            report = verify_expansion(gamma, n, 2, budget=budget, workers=workers)
            bad = report.witness
        else:
            bad = _expansion_sampled(gamma, n, samples, rng)
        if bad is not None:
            check, witness = "expansion", bad
            continue
        h = HashFunction(gamma, WeightSpec(t, p, derive_seed(seed, "pi", attempt)), z, n, regime=regime)
        ureport = verify_useful(
            h, n, regime, budget, samples=samples, rng=rng, workers=workers
        )
        if ureport.holds:
            return h, attempt
        check, witness = "usefulness", (ureport.subset, ureport.beta)
    raise SamplingError(
        f"no verified hash function in {max_attempts} attempts; last failure: {check} {witness}",
        attempts=max_attempts,
        check=check,
        witness=witness,
    )


def new_hash(
    u: int,
    n: int,
    s: int,
    max_attempts: int = 16,
    *,
    seed: bytes | None = None,
    budget: int = DEFAULT_BUDGET,
    samples: int = DEFAULT_SAMPLES,
    workers: int = 1,
) -> HashFunction:
    """n-wise independent ``h: [u] -> F_p`` over ``s >= 4n`` cells.

    Uses ``t = hash_degree`` and ``p = field_prime(u)``.
    """
    shape = ProblemShape(u, n, s)
    t = hash_degree(shape)
    p = field_prime(u)
    h, _ = sample_useful(
        u, n, s, t, p, seed=seed, max_attempts=max_attempts, budget=budget, samples=samples, workers=workers
    )
    return h


class IndependenceReport(NamedTuple):
    keys: tuple[int, ...]
    trials: int
    bins: int
    statistic: float
    pvalue: float


def _bin_edges(p: int, bins: int) -> np.ndarray:
    # residue r goes to bin floor(r * bins / p)
    return (np.arange(p) * bins) // p


def independence_test(
    h: HashFunction,
    keys: Sequence[int],
    trials: int,
    bins: int = 4,
    *,
    rng: np.random.Generator | None = None,
) -> IndependenceReport:
    """Chi-square test of ``(h(x_1), ..., h(x_k))`` against uniform on F_p^k.

    The seed memory is redrawn uniformly ``trials`` times. Each coordinate is
    binned into ``bins`` equal-width residue ranges, and expected counts use
    the exact bin sizes. Values are computed as ``<row(x), z>``, which equals
    ``evaluate(x)`` for every ``z``.
    """
    keys = tuple(int(k) for k in keys)
    k = len(keys)
    if len(set(keys)) != k or k == 0:
        raise ConfigurationError("keys must be non-empty and distinct")
    if bins < 2 or bins > h.p:
        raise ConfigurationError(f"bins must lie in [2, p={h.p}]")
    if bins**k * 20 > trials:
        raise ConfigurationError(f"{bins}^{k} cells need at least {20 * bins**k} trials, got {trials}")
    rng = rng if rng is not None else np.random.default_rng()
    p = h.p
    mat = np.zeros((h.s, k), dtype=object if p >= 1 << 31 else np.int64)
    for col, x in enumerate(keys):
        for y, c in h.row(x):
            mat[y, col] = c
    z = rng.integers(0, p, size=(trials, h.s), dtype=np.int64)
    if mat.dtype == object:
        values = (z.astype(object) @ mat) % p
    else:
        # chunk the product so int64 never overflows: each term < p^2
        values = np.zeros((trials, k), dtype=np.int64)
        for y in range(h.s):
            values = (values + z[:, y : y + 1] * mat[y]) % p
    edges = _bin_edges(p, bins)
    binned = edges[np.asarray(values, dtype=np.int64)]
    flat = np.zeros(trials, dtype=np.int64)
    for col in range(k):
        flat = flat * bins + binned[:, col]
    observed = np.bincount(flat, minlength=bins**k)
    sizes = np.bincount(edges, minlength=bins) / p
    expected = sizes
    for _ in range(k - 1):
        expected = np.multiply.outer(expected, sizes).ravel()
    result = stats.chisquare(observed, expected * trials)
    return IndependenceReport(keys, trials, bins, float(result.statistic), float(result.pvalue))
