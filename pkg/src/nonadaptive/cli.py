"""Command-line harness: ``nonadaptive <subcommand> [flags]``.

Exit codes: 0 success, 1 domain failure (build exhausted, expansion or
usefulness violated, budget exceeded, corrupt file), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dictionary as dct
from . import kwise_hash as kh
from ._prf import SEED_BYTES, derive_seed
from .errors import NonAdaptiveError, ParseError
from .expander import DEFAULT_BUDGET, ExpanderSpec, verify_expansion
from .params import ProblemShape, dict_degree, field_prime, hash_degree, param_report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def read_pairs(path: str | Path) -> list[tuple[int, int]]:
    """Parse ``<key>\\t<value>`` lines; ``#`` lines and blank lines are skipped."""
    pairs = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
            raise ParseError(f"{path}:{lineno}: expected '<key>\\t<value>' in unsigned decimal")
        pairs.append((int(parts[0]), int(parts[1])))
    return pairs


def write_pairs(path: str | Path, pairs: Sequence[tuple[int, int]]) -> None:
    Path(path).write_text("".join(f"{k}\t{v}\n" for k, v in pairs))


def _read_keys(args) -> list[int]:
    keys = list(args.keys)
    if args.keys_file:
        for lineno, line in enumerate(Path(args.keys_file).read_text().splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            first = line.split("\t")[0].strip()
            if not first.isdigit():
                raise ParseError(f"{args.keys_file}:{lineno}: expected an unsigned decimal key")
            keys.append(int(first))
    return keys


def _master_seed(args) -> bytes:
    if args.seed is None:
        return os.urandom(SEED_BYTES)
    try:
        seed = bytes.fromhex(args.seed)
    except ValueError:
        raise UsageError(f"--seed must be a hex string, got {args.seed!r}") from None
    if not seed:
        raise UsageError("--seed must not be empty")
    return seed


def _shape(args) -> ProblemShape:
    return ProblemShape(args.u, args.n, args.s, getattr(args, "w", None) or 0)


def _emit(args, payload: dict, lines: Sequence[str]) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _fmt(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_params(args) -> int:
    report = param_report(_shape(args))
    d = report.to_dict()
    rows = [
        ("t_dict", report.t_dict),
        ("t_hash", report.t_hash),
        ("p", report.p),
        ("dict_fail_bound", report.dict_fail_bound),
        ("hash_expander_fail_bound", report.hash_expander_fail_bound),
        ("usefulness_fail_bound", report.usefulness_fail_bound),
        ("query_lower_bound", report.lower_bound_t),
        ("degree_lower_bound", report.degree_lower_bound_t),
        ("cell_sampling_q", report.cell_sampling_q),
    ]
    sh = report.shape
    lines = [f"shape\tu={sh.u} n={sh.n} s={sh.s} w={sh.w}"]
    lines += [f"{name}\t{_fmt(v)}" for name, v in rows]
    if report.t_hash is None:
        lines.append(f"# t_hash needs s >= 4n = {4 * sh.n}")
    _emit(args, d, lines)
    return EXIT_OK


def cmd_build(args) -> int:
    pairs = read_pairs(args.infile)
    master = _master_seed(args)
    d = dct.build(pairs, args.u, args.s, args.t, seed=derive_seed(master, "gamma"), max_attempts=args.max_attempts)
    Path(args.out).write_bytes(d.to_bytes())
    payload = {"u": d.u, "s": d.s, "t": d.t, "n": d.n, "build_attempts": d.build_attempts, "out": str(args.out)}
    _emit(args, payload, [f"{k}\t{v}" for k, v in payload.items()])
    return EXIT_OK


def cmd_query(args) -> int:
    d = dct.Dictionary.from_bytes(Path(args.infile).read_bytes())
    keys = _read_keys(args)
    results = []
    for x in keys:
        value, trace = d.query(x)
        results.append({"key": x, "value": value, "probes": list(trace.addresses)})
    lines = [f"{r['key']}\t{'NIL' if r['value'] is None else r['value']}" for r in results]
    _emit(args, {"t": d.t, "results": results}, lines)
    return EXIT_OK


def cmd_hash_new(args) -> int:
    master = _master_seed(args)
    shape = _shape(args)
    h, attempts = kh.sample_useful(
        shape.u,
        shape.n,
        shape.s,
        args.t or hash_degree(shape),
        field_prime(shape.u),
        seed=derive_seed(master, "hash"),
        max_attempts=args.max_attempts,
        budget=args.budget,
        samples=args.trials,
        workers=args.threads,
    )
    Path(args.out).write_bytes(h.to_bytes())
    payload = {
        "u": h.u, "n": h.n, "s": h.s, "t": h.t, "p": h.p,
        "attempts": attempts, "regime": h.regime, "out": str(args.out),
    }
    _emit(args, payload, [f"{k}\t{v}" for k, v in payload.items()])
    return EXIT_OK


def cmd_hash_eval(args) -> int:
    h = kh.HashFunction.from_bytes(Path(args.infile).read_bytes())
    keys = _read_keys(args) or list(range(h.u))
    results = []
    for x in keys:
        value, trace = h.evaluate(x)
        results.append({"key": x, "value": value, "probes": list(trace.addresses)})
    _emit(args, {"p": h.p, "t": h.t, "results": results}, [f"{r['key']}\t{r['value']}" for r in results])
    return EXIT_OK


def cmd_verify_expander(args) -> int:
    if args.n is None:
        raise UsageError("verify-expander needs --n (largest subset size to check)")
    t = args.t
    if t is None:
        shape = ProblemShape(args.u, args.n, args.s)
        t = dict_degree(shape) if args.a == 1 else hash_degree(shape)
    master = _master_seed(args)
    # same graph that `build --seed` uses on its first attempt
    spec = ExpanderSpec(args.u, args.s, t, derive_seed(master, "gamma"))
    report = verify_expansion(spec, args.n, args.a, budget=args.budget, workers=args.threads)
    payload = {
        "u": args.u, "s": args.s, "t": t, "k_max": report.k_max, "a": report.a,
        "holds": report.holds,
        "witness": list(report.witness) if report.witness else None,
        "witness_neighbors": len(spec.neighbor_set(report.witness)) if report.witness else None,
        "subsets_checked": report.subsets_checked,
    }
    lines = [f"{k}\t{v}" for k, v in payload.items()]
    _emit(args, payload, lines)
    return EXIT_OK if report.holds else EXIT_FAIL


def cmd_verify_useful(args) -> int:
    h = kh.HashFunction.from_bytes(Path(args.infile).read_bytes())
    master = _master_seed(args)
    rng = np.random.default_rng(int.from_bytes(derive_seed(master, "spot-check"), "little"))
    report = kh.verify_useful(
        h, args.n or h.n, args.mode, args.budget, samples=args.trials, rng=rng, workers=args.threads
    )
    payload = {
        "n": report.n, "mode": report.mode, "holds": report.holds,
        "subset": list(report.subset) if report.subset else None,
        "beta": report.beta, "subsets_checked": report.subsets_checked,
    }
    _emit(args, payload, [f"{k}\t{v}" for k, v in payload.items()])
    return EXIT_OK if report.holds else EXIT_FAIL


def _workload(args, master: bytes) -> tuple[list[tuple[int, int]], list[int]]:
    rng = np.random.default_rng(int.from_bytes(derive_seed(master, "workload"), "little"))
    if args.infile:
        pairs = read_pairs(args.infile)
    else:
        if args.n is None:
            raise UsageError("bench needs --n or --in")
        keys = rng.choice(args.u, size=args.n, replace=False)
        values = rng.integers(0, args.u, size=args.n)
        pairs = [(int(k), int(v)) for k, v in zip(keys, values)]
    members = {k for k, _ in pairs}
    if len(members) >= args.u:
        return pairs, []
    queries: list[int] = []
    while len(queries) < args.trials:
        batch = rng.integers(0, args.u, size=2 * (args.trials - len(queries)) + 16)
        queries.extend(int(x) for x in batch if int(x) not in members)
    return pairs, queries[: args.trials]


def cmd_bench(args) -> int:
    master = _master_seed(args)
    pairs, non_members = _workload(args, master)
    t0 = time.perf_counter()
    d = dct.build(pairs, args.u, args.s, args.t, seed=derive_seed(master, "gamma"), max_attempts=args.max_attempts)
    build_seconds = time.perf_counter() - t0
    if args.out:
        Path(args.out).write_bytes(d.to_bytes())

    queries = [k for k, _ in pairs] + non_members
    expected = dict(pairs)

    def run(chunk: Sequence[int]) -> tuple[int, int, int]:
        wrong, lo, hi = 0, None, 0
        for x in chunk:
            value, trace = d.query(x)
            lo = trace.count if lo is None else min(lo, trace.count)
            hi = max(hi, trace.count)
            wrong += value != expected.get(x)
        return wrong, lo if lo is not None else 0, hi

    t0 = time.perf_counter()
    if args.threads > 1:
        size = max(1, len(queries) // args.threads + 1)
        chunks = [queries[i : i + size] for i in range(0, len(queries), size)]
        with ThreadPoolExecutor(args.threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(queries)]
    query_seconds = time.perf_counter() - t0
    wrong = sum(p[0] for p in parts)
    counts = [p for p in parts if p[2]]
    lo = min((p[1] for p in counts), default=0)
    hi = max((p[2] for p in counts), default=0)
    payload = {
        "u": d.u, "n": d.n, "s": d.s, "t": d.t,
        "build_attempts": d.build_attempts,
        "build_seconds": build_seconds,
        "queries": len(queries),
        "member_queries": len(pairs),
        "wrong_answers": wrong,
        "probes_per_query": lo if lo == hi else None,
        "probes_min": lo,
        "probes_max": hi,
        "query_seconds": query_seconds,
        "queries_per_second": len(queries) / query_seconds if query_seconds > 0 else None,
    }
    _emit(args, payload, [f"{k}\t{_fmt(v)}" for k, v in payload.items()])
    return EXIT_OK if wrong == 0 and lo == hi == d.t else EXIT_FAIL


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonadaptive", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seed=False, out=False, infile=None, threads=False, budget=False, trials=None):
        p.add_argument("--json", action="store_true", help="machine-readable output")
        if seed:
            p.add_argument("--seed", help="master seed as hex; makes the run reproducible")
        if out:
            p.add_argument("--out", required=True, help="output file")
        if infile is not None:
            p.add_argument("--in", dest="infile", required=infile, help="input file")
        if threads:
            p.add_argument("--threads", type=_positive, default=1)
        if budget:
            p.add_argument("--budget", type=_positive, default=DEFAULT_BUDGET, help="subset enumeration cap")
        if trials is not None:
            p.add_argument("--trials", type=_positive, default=trials)

    def keys(p):
        p.add_argument("keys", nargs="*", type=int, help="keys to look up")
        p.add_argument("--keys", dest="keys_file", help="file with one key per line (extra columns ignored)")

    p = sub.add_parser("params", help="degrees, prime and bounds for a shape")
    p.add_argument("--u", type=_positive, required=True)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--s", type=_positive, required=True)
    p.add_argument("--w", type=_positive)
    common(p)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("build", help="build a dictionary from a pair file")
    p.add_argument("--u", type=_positive, required=True)
    p.add_argument("--s", type=_positive, required=True)
    p.add_argument("--t", type=_positive)
    p.add_argument("--max-attempts", type=_positive, default=dct.DEFAULT_MAX_ATTEMPTS)
    common(p, seed=True, out=True, infile=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="look up keys in a built dictionary")
    common(p, infile=True)
    keys(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("hash-new", help="sample and verify an n-wise independent hash function")
    p.add_argument("--u", type=_positive, required=True)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--s", type=_positive, required=True)
    p.add_argument("--t", type=_positive)
    p.add_argument("--max-attempts", type=_positive, default=16)
    common(p, seed=True, out=True, threads=True, budget=True, trials=kh.DEFAULT_SAMPLES)
    p.set_defaults(func=cmd_hash_new)

    p = sub.add_parser("hash-eval", help="evaluate a stored hash function (all keys by default)")
    common(p, infile=True)
    keys(p)
    p.set_defaults(func=cmd_hash_eval)

    p = sub.add_parser("verify-expander", help="exhaustively check expansion of a seeded graph")
    p.add_argument("--u", type=_positive, required=True)
    p.add_argument("--s", type=_positive, required=True)
    p.add_argument("--n", type=int, help="largest subset size (k_max)")
    p.add_argument("--t", type=_positive)
    p.add_argument("--a", type=int, choices=(1, 2), default=1)
    common(p, seed=True, threads=True, budget=True)
    p.set_defaults(func=cmd_verify_expander)

    p = sub.add_parser("verify-useful", help="rank-check row subsets of a stored hash function")
    p.add_argument("--n", type=_positive)
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    common(p, seed=True, infile=True, threads=True, budget=True, trials=kh.DEFAULT_SAMPLES)
    p.set_defaults(func=cmd_verify_useful)

    p = sub.add_parser("bench", help="build over a workload and measure probes and throughput")
    p.add_argument("--u", type=_positive, required=True)
    p.add_argument("--n", type=_positive)
    p.add_argument("--s", type=_positive, required=True)
    p.add_argument("--t", type=_positive)
    p.add_argument("--max-attempts", type=_positive, default=dct.DEFAULT_MAX_ATTEMPTS)
    common(p, seed=True, infile=False, threads=True, trials=10_000)
    p.add_argument("--out", help="also write the built dictionary here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonAdaptiveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, ValueError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())
