import json
import random
import subprocess
import sys

import pytest

from nonadaptive.cli import main, read_pairs, write_pairs
from nonadaptive.params import ProblemShape, param_report

SEED = "00" * 31 + "2a"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--json")
    return code, json.loads(out) if out.strip() else None, err


@pytest.fixture
def pairs_file(tmp_path):
    rnd = random.Random(9)
    keys = rnd.sample(range(2**16), 256)
    pairs = [(k, rnd.randrange(2**16)) for k in keys]
    path = tmp_path / "pairs.tsv"
    write_pairs(path, pairs)
    return path, pairs


def test_params_text_and_json(capsys):
    code, out, _ = run(capsys, "params", "--u", "1024", "--n", "16", "--s", "64")
    assert code == 0
    table = dict(line.split("\t", 1) for line in out.splitlines() if not line.startswith("#"))
    assert table["t_dict"] == "8" and table["t_hash"] == "10" and table["p"] == "5569"
    code, payload, _ = run_json(capsys, "params", "--u", "65536", "--n", "256", "--s", "1024", "--w", "16")
    assert code == 0
    assert payload == json.loads(json.dumps(param_report(ProblemShape(65536, 256, 1024, 16)).to_dict()))


def test_params_hash_not_applicable(capsys):
    code, payload, _ = run_json(capsys, "params", "--u", "1024", "--n", "16", "--s", "40")
    assert code == 0 and payload["t_hash"] is None and payload["t_dict"] is not None


def test_missing_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["params", "--u", "100", "--n", "4"])
    assert info.value.code == 2


def test_domain_precondition_is_usage_error(capsys):
    code, _, err = run(capsys, "params", "--u", "100", "--n", "8", "--s", "15")
    assert code == 2 and "s >= 2n" in err


def test_bad_hex_seed(capsys, pairs_file, tmp_path):
    path, _ = pairs_file
    code, _, err = run(capsys, "build", "--u", "65536", "--s", "1024", "--in", str(path),
                       "--out", str(tmp_path / "d.bin"), "--seed", "xyz")
    assert code == 2 and "hex" in err


def test_build_then_query_returns_every_value(capsys, pairs_file, tmp_path):
    path, pairs = pairs_file
    out = tmp_path / "d.bin"
    code, payload, _ = run_json(capsys, "build", "--u", "65536", "--s", "1024", "--in", str(path),
                                "--out", str(out), "--seed", SEED)
    assert code == 0 and payload["t"] == 9 and payload["n"] == 256
    keys_file = tmp_path / "keys.tsv"
    keys_file.write_text(path.read_text())
    code, payload, _ = run_json(capsys, "query", "--in", str(out), "--keys", str(keys_file))
    assert code == 0
    got = {r["key"]: r["value"] for r in payload["results"]}
    assert got == dict(pairs)
    assert all(len(r["probes"]) == 9 for r in payload["results"])
    members = dict(pairs)
    absent = next(x for x in range(2**16) if x not in members)
    code, out_text, _ = run(capsys, "query", "--in", str(out), str(absent))
    assert code == 0 and out_text.strip() == f"{absent}\tNIL"


def test_same_seed_same_bytes(capsys, pairs_file, tmp_path):
    path, _ = pairs_file
    files = []
    for i in range(2):
        files.append(tmp_path / f"d{i}.bin")
        run(capsys, "build", "--u", "65536", "--s", "1024", "--in", str(path), "--out", str(files[-1]), "--seed", SEED)
    assert files[0].read_bytes() == files[1].read_bytes()


def test_bench_probes(capsys, tmp_path):
    code, payload, _ = run_json(capsys, "bench", "--u", "65536", "--n", "256", "--s", "1024", "--t", "9",
                                "--seed", SEED, "--trials", "2000")
    assert code == 0
    assert payload["probes_per_query"] == 9 == payload["probes_min"] == payload["probes_max"]
    assert payload["wrong_answers"] == 0
    assert payload["queries"] == 2256 and payload["member_queries"] == 256


def test_bench_deterministic_apart_from_timing(capsys):
    timing = {"build_seconds", "query_seconds", "queries_per_second"}
    outs = []
    for threads in ("1", "1", "4"):
        _, payload, _ = run_json(capsys, "bench", "--u", "4096", "--n", "64", "--s", "256",
                                 "--seed", SEED, "--trials", "500", "--threads", threads)
        outs.append({k: v for k, v in payload.items() if k not in timing})
    assert outs[0] == outs[1] == outs[2]


def test_verify_expander(capsys):
    argv = ["verify-expander", "--u", "40", "--s", "32", "--n", "4", "--seed", SEED]
    code, payload, _ = run_json(capsys, *argv)
    assert code == 0 and payload["holds"] and payload["t"] == 7
    code2, payload2, _ = run_json(capsys, *argv, "--threads", "3")
    assert (code2, payload2) == (code, payload)


def test_verify_expander_violation_exit_1(capsys):
    code, payload, _ = run_json(capsys, "verify-expander", "--u", "20", "--s", "4", "--t", "1",
                                "--n", "3", "--seed", SEED)
    assert code == 1 and not payload["holds"]
    assert payload["witness_neighbors"] < len(payload["witness"])


def test_verify_expander_budget(capsys):
    code, out, err = run(capsys, "verify-expander", "--u", "64", "--s", "64", "--n", "5", "--budget", "3", "--seed", SEED)
    assert code == 1 and "budget exceeded" in err and out == ""


def test_hash_new_eval_verify(capsys, tmp_path):
    out = tmp_path / "h.bin"
    code, payload, _ = run_json(capsys, "hash-new", "--u", "32", "--n", "3", "--s", "16", "--seed", SEED, "--out", str(out))
    assert code == 0 and payload["p"] == 179 and payload["regime"] == "exhaustive"
    first = out.read_bytes()
    run(capsys, "hash-new", "--u", "32", "--n", "3", "--s", "16", "--seed", SEED, "--out", str(out))
    assert out.read_bytes() == first
    code, payload, _ = run_json(capsys, "hash-eval", "--in", str(out))
    assert code == 0 and len(payload["results"]) == 32
    assert all(0 <= r["value"] < 179 and len(r["probes"]) == payload["t"] for r in payload["results"])
    code, payload, _ = run_json(capsys, "verify-useful", "--in", str(out))
    assert code == 0 and payload["holds"] and payload["subsets_checked"] == 4960
    code, _, err = run(capsys, "verify-useful", "--in", str(out), "--budget", "100")
    assert code == 1 and "budget exceeded" in err


def test_corrupt_input_exit_1(capsys, tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"garbage")
    code, _, err = run(capsys, "query", "--in", str(bad), "1")
    assert code == 1 and "NADCT1" in err
    code, _, _ = run(capsys, "hash-eval", "--in", str(bad))
    assert code == 1


def test_missing_file_usage_error(capsys, tmp_path):
    code, _, _ = run(capsys, "query", "--in", str(tmp_path / "nope.bin"), "1")
    assert code == 2


def test_read_pairs_rejects_malformed(tmp_path):
    path = tmp_path / "p.tsv"
    path.write_text("# header\n1\t2\n\n3 4\n")
    with pytest.raises(ValueError, match=":4:"):
        read_pairs(path)
    path.write_text("# header\n1\t2\n\n3\t4\n")
    assert read_pairs(path) == [(1, 2), (3, 4)]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "nonadaptive", "params", "--u", "1024", "--n", "16", "--s", "64", "--json"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["shape"]["u"] == 1024
