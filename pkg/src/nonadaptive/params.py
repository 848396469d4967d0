"""Degrees, field primes and closed-form bounds for a problem shape.

All logarithms are base 2. Degrees are computed with exact integer
comparisons so that, e.g., ``lg 64 / lg 4`` is exactly 3 and never 3.0000001.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from decimal import ROUND_CEILING, Decimal, localcontext

import mpmath

__all__ = [
    "ProblemShape",
    "ParamReport",
    "dict_degree",
    "hash_degree",
    "field_prime",
    "is_prime",
    "dict_expander_fail_bound",
    "hash_expander_fail_bound",
    "usefulness_fail_bound",
    "query_lower_bound",
    "cell_sampling_q",
    "degree_lower_bound",
    "param_report",
]

# the dps used for all bound sums
_DPS = 40
_GEOMETRIC_EPS = 1e-9
_U64 = 1 << 64


@dataclass(frozen=True)
class ProblemShape:
    """Universe size ``u``, key count ``n``, cell count ``s`` and cell width ``w`` in bits.

    ``w`` defaults to ``max(1, ceil(lg u))``.
    """

    u: int
    n: int
    s: int
    w: int = field(default=0)

    def __post_init__(self):
        for name in ("u", "n", "s"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.w == 0:
            object.__setattr__(self, "w", max(1, (self.u - 1).bit_length()))
        if not isinstance(self.w, int) or self.w < 1:
            raise ValueError(f"w must be a positive integer, got {self.w!r}")
        if self.u < self.n:
            raise ValueError(f"requires u >= n (u={self.u}, n={self.n})")


@dataclass(frozen=True)
class ParamReport:
    shape: ProblemShape
    t_dict: int
    t_hash: int | None
    p: int
    dict_fail_bound: float
    hash_expander_fail_bound: float | None
    usefulness_fail_bound: float
    lower_bound_t: float | None
    degree_lower_bound_t: float | None
    cell_sampling_q: float | None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["shape"] = asdict(self.shape)
        return d


def _ceil_log_ratio(num: int, den: int, base_num: int, base_den: int) -> int:
    """Smallest k >= 0 with (base_num/base_den)^k >= num/den, for base > 1."""
    k = 0
    lhs_n, lhs_d = 1, 1
    # (bn/bd)^k >= num/den  <=>  bn^k * den >= num * bd^k
    while lhs_n * den < num * lhs_d:
        lhs_n *= base_num
        lhs_d *= base_den
        k += 1
    return k


def dict_degree(shape: ProblemShape) -> int:
    """Left degree ``ceil(lg(u/n) / lg(s/n)) + 5`` of a non-contractive expander."""
    if shape.s < 2 * shape.n:
        raise ValueError(f"dictionary degree requires s >= 2n (s={shape.s}, 2n={2 * shape.n})")
    return _ceil_log_ratio(shape.u, shape.n, shape.s, shape.n) + 5


def hash_degree(shape: ProblemShape) -> int:
    """Left degree ``ceil(2 lg(u/n) / lg(s/n)) + 4`` of a (<=n, 2)-expander."""
    if shape.s < 4 * shape.n:
        raise ValueError(f"hashing degree requires s >= 4n (s={shape.s}, 4n={4 * shape.n})")
    return _ceil_log_ratio(shape.u**2, shape.n**2, shape.s, shape.n) + 4


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(m: int) -> bool:
    """Deterministic Miller-Rabin; exact for every m < 3.3e24 (so all 64-bit m)."""
    if m < 2:
        return False
    for b in _MR_BASES:
        if m % b == 0:
            return m == b
    d, r = m - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, m)
        if x == 1 or x == m - 1:
            continue
        for _ in range(r - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


def _ceil_2eu(u: int) -> int:
    with localcontext() as ctx:
        ctx.prec = 60
        return int((2 * Decimal(1).exp() * u).to_integral_value(rounding=ROUND_CEILING))


def field_prime(u: int) -> int:
    """Smallest prime ``p >= ceil(2 e u)``.

    Raises OverflowError when no such prime fits in 64 bits.
    """
    if u < 1:
        raise ValueError(f"u must be >= 1, got {u}")
    p = _ceil_2eu(u)
    if p >= _U64:
        raise OverflowError(f"2e*u exceeds the 64-bit range for u={u}")
    while not is_prime(p):
        p += 1
        if p >= _U64:
            raise OverflowError(f"no 64-bit prime >= 2e*u for u={u}")
    return p


def _power_sum(r, n: int):
    """sum_{i=1..n} r^i in mpmath arithmetic."""
    if abs(r - 1) < _GEOMETRIC_EPS:
        total = mpmath.mpf(0)
        term = mpmath.mpf(1)
        for _ in range(n):
            term *= r
            total += term
        return total
    return r * (1 - r**n) / (1 - r)


def dict_expander_fail_bound(shape: ProblemShape, t: int) -> float:
    """Union bound on a random degree-``t`` graph failing (<=n)-non-contraction.

    Sum over i=1..n of ``(e^2 (u/n) (n/s)^(t-1))^i``.
    """
    if t < 2:
        raise ValueError(f"requires t >= 2, got {t}")
    if shape.s <= shape.n:
        raise ValueError(f"requires s > n (s={shape.s}, n={shape.n})")
    with mpmath.workdps(_DPS):
        u, n, s = (mpmath.mpf(v) for v in (shape.u, shape.n, shape.s))
        r = mpmath.e**2 * (u / n) * (n / s) ** (t - 1)
        return float(_power_sum(r, shape.n))


def hash_expander_fail_bound(shape: ProblemShape, t: int) -> float:
    """Union bound on a random degree-``t`` graph failing (<=n, 2)-expansion.

    Sum over i=1..n of ``(e (u/n) (2n/s)^(t-2))^i``.
    """
    if t < 3:
        raise ValueError(f"requires t >= 3, got {t}")
    if shape.s <= 2 * shape.n:
        raise ValueError(f"requires s > 2n (s={shape.s}, 2n={2 * shape.n})")
    with mpmath.workdps(_DPS):
        u, n, s = (mpmath.mpf(v) for v in (shape.u, shape.n, shape.s))
        r = mpmath.e * (u / n) * (2 * n / s) ** (t - 2)
        return float(_power_sum(r, shape.n))


def usefulness_fail_bound(u: int, n: int, p: int) -> float:
    """Union bound on random weights failing to make a (<=n, 2)-expander useful.

    Sum over i=1..n of ``(e u / (i p))^i``. Once ``i > 2 e u / p`` consecutive
    terms shrink by at least half, so the sum stops when the remaining tail
    cannot move the result at working precision.
    """
    if p < 2:
        raise ValueError(f"requires p >= 2, got {p}")
    if n < 1:
        raise ValueError(f"requires n >= 1, got {n}")
    with mpmath.workdps(_DPS):
        c = mpmath.e * u / p
        total = mpmath.mpf(0)
        tiny = mpmath.mpf(10) ** (-_DPS)
        for i in range(1, n + 1):
            term = (c / i) ** i
            total += term
            if i > 2 * c and term <= tiny * total:
                break
        return float(total)


def _pad_cells(shape: ProblemShape) -> int:
    """Cells after padding so that s*w >= 6 n lg(u/n)."""
    need = 6 * shape.n * math.log2(shape.u / shape.n)
    if shape.s * shape.w >= need:
        return shape.s
    return math.ceil(need / shape.w)


def query_lower_bound(shape: ProblemShape) -> float:
    """``min(n lg(u/n) / w, lg(u/n) / lg(s w / (n lg(u/n))))`` with constant 1.

    This is the expression inside the asymptotic lower bound on non-adaptive
    query time, not a concrete probe count. ``s`` is padded upward first if
    ``s w < 6 n lg(u/n)``.
    """
    if shape.u <= shape.n:
        raise ValueError(f"query lower bound requires u > n (u={shape.u}, n={shape.n})")
    lg_un = math.log2(shape.u / shape.n)
    info = shape.n * lg_un
    s = _pad_cells(shape)
    return min(info / shape.w, lg_un / math.log2(s * shape.w / info))


def cell_sampling_q(shape: ProblemShape) -> float:
    """Size of the sampled cell set in the lower-bound argument, ``(1/4) n lg(u/n) / w``.

    Exposed for reporting only.
    """
    if shape.u <= shape.n:
        raise ValueError(f"requires u > n (u={shape.u}, n={shape.n})")
    return 0.25 * shape.n * math.log2(shape.u / shape.n) / shape.w


def degree_lower_bound(shape: ProblemShape) -> float:
    """Disperser degree floor ``lg(u/n) / lg(s/n)`` (constant 1)."""
    if shape.u <= shape.n or shape.s <= shape.n:
        raise ValueError(f"requires u > n and s > n (u={shape.u}, n={shape.n}, s={shape.s})")
    return math.log2(shape.u / shape.n) / math.log2(shape.s / shape.n)


def param_report(shape: ProblemShape) -> ParamReport:
    """Everything the ``params`` subcommand prints. Requires s >= 2n."""
    t_dict = dict_degree(shape)
    t_hash = hash_degree(shape) if shape.s >= 4 * shape.n else None
    p = field_prime(shape.u)
    strict = shape.u > shape.n
    return ParamReport(
        shape=shape,
        t_dict=t_dict,
        t_hash=t_hash,
        p=p,
        dict_fail_bound=dict_expander_fail_bound(shape, t_dict),
        hash_expander_fail_bound=(
            hash_expander_fail_bound(shape, t_hash) if t_hash is not None else None
        ),
        usefulness_fail_bound=usefulness_fail_bound(shape.u, shape.n, p),
        lower_bound_t=query_lower_bound(shape) if strict else None,
        degree_lower_bound_t=degree_lower_bound(shape) if strict else None,
        cell_sampling_q=cell_sampling_q(shape) if strict else None,
    )
