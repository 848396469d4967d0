"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are also collected
into an "acceptance criteria" section of the terminal summary.
"""

import contextlib
import io
import itertools
import json
import math
import statistics
import time
from collections import Counter

import numpy as np

from nonadaptive import dictionary as dct
from nonadaptive._prf import derive_seed
from nonadaptive.cli import build_parser, cmd_params
from nonadaptive.expander import (
    ExpanderSpec,
    TabulatedGraph,
    sample_verified,
    verify_expansion,
    verify_expansion_naive,
)
from nonadaptive.kwise_hash import (
    HashFunction,
    TabulatedWeights,
    independence_test,
    new_hash,
    sample_useful,
    verify_useful,
)
from nonadaptive.params import (
    ProblemShape,
    dict_degree,
    dict_expander_fail_bound,
    field_prime,
    hash_degree,
    hash_expander_fail_bound,
    query_lower_bound,
    usefulness_fail_bound,
)

from conftest import ACCEPTANCE_LINES, shape_grid

MASTER = b"acceptance".ljust(32, b"\x00")


def report(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_1_parameter_reproduction():
    args = build_parser().parse_args(["params", "--u", "1024", "--n", "16", "--s", "64", "--json"])
    timings = []
    for _ in range(5):
        buf = io.StringIO()
        t0 = time.perf_counter()
        with contextlib.redirect_stdout(buf):
            code = cmd_params(args)
        timings.append(time.perf_counter() - t0)
    payload = json.loads(buf.getvalue())
    elapsed = statistics.median(timings)
    ok = code == 0 and payload["t_dict"] == 8 and payload["t_hash"] == 10 and elapsed < 1e-3
    report(1, ok, f"t_dict={payload['t_dict']} t_hash={payload['t_hash']} median {elapsed * 1e3:.3f} ms")
    assert ok


def test_criterion_2_existence_bounds():
    t0 = time.perf_counter()
    grid = shape_grid()
    failures = []
    hash_shapes = 0
    for shape in grid:
        t = dict_degree(shape)
        b = dict_expander_fail_bound(shape, t)
        if not b < 1:
            failures.append(("dict", shape, b))
        p = field_prime(shape.u)
        b = usefulness_fail_bound(shape.u, shape.n, p)
        if not b < 1:
            failures.append(("usefulness", shape, b))
        if shape.s >= 4 * shape.n:
            hash_shapes += 1
            b = hash_expander_fail_bound(shape, hash_degree(shape))
            if not b < 1:
                failures.append(("hash", shape, b))
    elapsed = time.perf_counter() - t0
    ok = len(grid) >= 100 and not failures and elapsed < 1
    kinds = Counter(kind for kind, _, _ in failures)
    worst = max((b for _, _, b in failures), default=0.0)
    report(
        2,
        ok,
        f"{len(grid)} shapes ({hash_shapes} with s >= 4n), {len(failures)} bounds >= 1 "
        f"{dict(kinds)} worst {worst:.4f}, {elapsed:.3f} s",
    )
    assert ok, failures[:5]


def test_criterion_3_dictionary_soundness():
    u, n, s, t = 2**16, 256, 1024, 9
    t0 = time.perf_counter()
    max_attempts_used = 0
    wrong = 0
    bad_probes = 0
    for run in range(100):
        seed = derive_seed(MASTER, "criterion-3", run)
        rng = np.random.default_rng(int.from_bytes(seed[:8], "little"))
        keys = rng.choice(u, size=n + 10_000, replace=False)
        members = [int(k) for k in keys[:n]]
        values = [int(v) for v in rng.integers(0, u, size=n)]
        d = dct.build(zip(members, values), u, s, t, seed=seed, max_attempts=16)
        max_attempts_used = max(max_attempts_used, d.build_attempts)
        for k, v in zip(members, values):
            value, trace = d.query(k)
            wrong += value != v
            bad_probes += trace.count != t
        for k in keys[n:]:
            value, trace = d.query(int(k))
            wrong += value is not None
            bad_probes += trace.count != t
    elapsed = time.perf_counter() - t0
    ok = wrong == 0 and bad_probes == 0 and elapsed < 10
    report(
        3,
        ok,
        f"100 builds, max attempts {max_attempts_used}, {wrong} wrong answers, "
        f"{bad_probes} queries not probing {t} cells, {elapsed:.2f} s",
    )
    assert ok


def test_criterion_4_nonadaptivity_audit():
    u, s, t = 2**16, 1024, 9
    spec = ExpanderSpec(u, s, t, derive_seed(MASTER, "criterion-4"))
    rng = np.random.default_rng(4)
    keys = rng.choice(u, size=512, replace=False)
    values = rng.integers(0, u, size=512)
    pairs = [(int(k), int(v)) for k, v in zip(keys, values)]
    d1 = dct.build_with_spec(pairs[:256], spec)
    d2 = dct.build_with_spec(pairs[256:], spec)
    assert not {k for k, _ in pairs[:256]} & {k for k, _ in pairs[256:]}
    probe_keys = [int(x) for x in rng.choice(u, size=1000, replace=False)]
    mismatches = 0
    for x in probe_keys:
        a = np.array(d1.query(x).trace.addresses, dtype="<u8").tobytes()
        b = np.array(d2.query(x).trace.addresses, dtype="<u8").tobytes()
        mismatches += a != b
    ok = mismatches == 0 and d1.cells != d2.cells
    report(4, ok, f"1000 keys, {mismatches} trace mismatches across disjoint builds")
    assert ok


def _small_instances():
    for u in range(1, 21):
        for s in (2, 3, 5, 8, 16):
            for t in (1, 2, 3):
                for a in (1, 2):
                    for k_max in sorted({min(u, 3), min(u, 5) if u <= 12 else min(u, 3)}):
                        seed = derive_seed(MASTER, f"c5/{u}/{s}/{t}/{a}/{k_max}")
                        yield ExpanderSpec(u, s, t, seed), k_max, a


def test_criterion_5_expansion_oracle():
    t0 = time.perf_counter()
    t = dict_degree(ProblemShape(48, 5, 32))
    seeds = (derive_seed(MASTER, "criterion-5", i) for i in itertools.count())
    sample = sample_verified(48, 32, t, 5, 1, seeds=seeds)
    independent = verify_expansion_naive(sample.spec, 5, 1)
    disagreements = 0
    instances = 0
    for spec, k_max, a in _small_instances():
        instances += 1
        fast = verify_expansion(spec, k_max, a)
        slow = verify_expansion_naive(spec, k_max, a)
        disagreements += (fast.holds, fast.witness) != (slow.holds, slow.witness)
    elapsed = time.perf_counter() - t0
    ok = sample.report.holds and independent.holds and disagreements == 0 and elapsed < 60
    report(
        5,
        ok,
        f"sample_verified(48, 32, t={t}, 5) in {sample.attempts} attempt(s); "
        f"{instances} instances with u <= 20, {disagreements} disagreements, {elapsed:.2f} s",
    )
    assert ok


def test_criterion_6_usefulness_oracle():
    t0 = time.perf_counter()
    h = new_hash(32, 3, 16, seed=derive_seed(MASTER, "criterion-6"))
    full = verify_useful(h, 3, "exhaustive")
    # duplicate row 2 into key 5 (same neighbors and weights)
    table = [tuple(h.gamma.neighbors(x)) for x in range(32)]
    weights = [tuple(h.weights.weights(x)) for x in range(32)]
    table[5], weights[5] = table[2], weights[2]
    dup = HashFunction(TabulatedGraph(32, 16, h.t, tuple(table)), TabulatedWeights(h.p, tuple(weights)), h.z, 3)
    bad = verify_useful(dup, 3, "exhaustive")
    kernel_ok = False
    if not bad.holds:
        combo = [0] * h.s
        for coef, x in zip(bad.beta, bad.subset):
            for y, c in dup.row(x):
                combo[y] = (combo[y] + coef * c) % h.p
        kernel_ok = any(bad.beta) and not any(combo)
    elapsed = time.perf_counter() - t0
    ok = h.p == 179 and full.holds and full.subsets_checked == 4960 and kernel_ok and elapsed < 10
    report(
        6,
        ok,
        f"p={h.p}, {full.subsets_checked} triples full rank={full.holds}; duplicated-row instance "
        f"fails at {bad.subset} with beta={bad.beta}, beta*A=0 {kernel_ok}; {elapsed:.2f} s",
    )
    assert ok


def test_criterion_7_exact_uniformity():
    t0 = time.perf_counter()
    h, _ = sample_useful(4, 2, 4, 4, 5, seed=derive_seed(MASTER, "criterion-7"), max_attempts=64)
    useful = verify_useful(h, 2).holds
    rows = [h.row(x) for x in range(4)]
    counts = {pair: Counter() for pair in itertools.combinations(range(4), 2)}
    for z in itertools.product(range(5), repeat=4):
        values = [sum(c * z[y] for y, c in row) % 5 for row in rows]
        for a, b in counts:
            counts[(a, b)][(values[a], values[b])] += 1
    # one pass through evaluate() confirms the row shortcut
    agrees = all(h.with_cells(z)(x) == sum(c * z[y] for y, c in rows[x]) % 5
                 for z in [(1, 2, 3, 4), (4, 0, 2, 1)] for x in range(4))
    elapsed = time.perf_counter() - t0
    perfect = all(len(c) == 25 and set(c.values()) == {25} for c in counts.values())
    ok = useful and agrees and perfect and elapsed < 1
    report(7, ok, f"625 seed vectors, every pair of all 6 key pairs hit exactly 25 times: {perfect}; {elapsed:.3f} s")
    assert ok


def test_criterion_8_statistical_independence():
    t0 = time.perf_counter()
    h = new_hash(8, 2, 8, seed=derive_seed(MASTER, "criterion-8"))
    rng = np.random.default_rng(int.from_bytes(derive_seed(MASTER, "criterion-8/rng")[:8], "little"))
    pairs = list(itertools.combinations(range(8), 2))
    passes = 0
    for run in range(100):
        keys = pairs[run % len(pairs)]
        passes += independence_test(h, keys, 100_000, 4, rng=rng).pvalue > 0.001
    table = [tuple(h.gamma.neighbors(x)) for x in range(8)]
    weights = [tuple(h.weights.weights(x)) for x in range(8)]
    table[5], weights[5] = table[2], weights[2]
    control = HashFunction(TabulatedGraph(8, 8, h.t, tuple(table)), TabulatedWeights(h.p, tuple(weights)), h.z, 2)
    rejected = sum(independence_test(control, (2, 5), 100_000, 4, rng=rng).pvalue <= 0.001 for _ in range(100))
    elapsed = time.perf_counter() - t0
    ok = h.p == 47 and passes >= 99 and rejected == 100 and elapsed < 30
    report(8, ok, f"p={h.p}: {passes}/100 runs with p-value > 0.001; control rejected {rejected}/100; {elapsed:.2f} s")
    assert ok


def test_criterion_9_bound_consistency():
    violations = []
    grid = shape_grid()
    for shape in grid:
        assert shape.w == max(1, math.ceil(math.log2(shape.u)))
        lb = query_lower_bound(shape)
        ub = dict_degree(shape)
        if lb > 4 * ub:
            violations.append((shape, lb, ub))
    ratio = max(query_lower_bound(sh) / dict_degree(sh) for sh in grid)
    ok = not violations
    report(9, ok, f"{len(grid)} shapes, {len(violations)} violations, max lower/upper ratio {ratio:.3f}")
    assert ok
