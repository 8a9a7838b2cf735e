from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from wlcirc.cli import Cache, graph_digest, main, run_batch
from wlcirc.graphs import cycle

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"


@pytest.fixture
def in_fixtures(monkeypatch):
    monkeypatch.chdir(FIXTURES)


def run(capsys, *argv) -> tuple[int, str]:
    code = main(list(argv))
    return code, capsys.readouterr().out


def run_json(capsys, *argv) -> tuple[int, dict]:
    code, out = run(capsys, *argv, "--json")
    return code, json.loads(out)


# ---------------------------------------------------------------- golden reports


@pytest.mark.parametrize(
    "name, argv, exit_code",
    [
        ("scheme_circ4_13", ["scheme", "circ:4:1,3"], 0),
        ("scheme_circ8_17", ["scheme", "circ:8:1,7"], 0),
        ("scheme_circ9_18", ["scheme", "circ:9:1,8"], 0),
        ("wl_circ5_14_m2", ["wl", "--m", "2", "circ:5:1,4"], 0),
        ("iso_circ8", ["iso", "circ:8:1,2,7", "circ8b.el"], 0),
        ("iso_circ9_triangles", ["iso", "circ:9:1,8", "threetriangles.el"], 1),
    ],
)
def test_golden(in_fixtures, capsys, name, argv, exit_code):
    code, out = run(capsys, *argv, "--json")
    assert code == exit_code
    assert out == (GOLDEN / f"{name}.json").read_text()


def test_wl_examples(in_fixtures, capsys):
    _, rep = run_json(capsys, "wl", "--m", "2", "circ:5:1,4")
    assert rep["colorings"][0]["classes"] == 3
    code, rep = run_json(capsys, "wl", "--m", "2", "c6.g6", "2c3.g6")
    assert code == 0 and rep["comparison"]["equivalent"] is False
    _, rep = run_json(capsys, "wl", "--m", "1", "edgeless3.el")
    assert rep["colorings"][0]["classes"] == 1


def test_scheme_examples(capsys):
    _, rep = run_json(capsys, "scheme", "circ:4:1,3")
    assert rep["scheme"]["radical"]["elements"] == [0, 2]
    assert {"U": 2, "L": 2, "nontrivial": True} in rep["wedges"]
    _, rep = run_json(capsys, "scheme", "circ:8:1,7")
    assert rep["tree"]["kind"] in ("Trivial", "Normal", "Wedge")
    _, rep = run_json(capsys, "scheme", "circ:9:1,8")
    assert "rank" in rep["scheme"] and "normal" in rep["scheme"]


def test_scheme_human_output(capsys):
    code, out = run(capsys, "scheme", "circ:4:1,3")
    assert code == 0 and "rank" in out and "Normal" in out


def test_scheme_non_prime_power(capsys):
    code, rep = run_json(capsys, "scheme", "circ:12:1,11")
    assert code == 0 and rep["tree"].get("non_prime_power")
    code, _ = run(capsys, "scheme", "circ:12:1,11", "--require-prime-power")
    assert code == 3


def test_iso_examples(in_fixtures, capsys):
    code, rep = run_json(capsys, "iso", "circ:8:1,2,7", "circ8b.el")
    assert code == 0 and rep["certificate"]["witness"] is not None
    code, rep = run_json(capsys, "iso", "circ:9:1,8", "threetriangles.el")
    assert code == 1 and rep["certificate"]["distinguisher"] is not None
    code, _ = run(capsys, "iso", "circ:4:1,3", "self.el")
    assert code == 0


def test_iso_undecided_exit_code(in_fixtures, capsys):
    code, rep = run_json(capsys, "iso", "circ:9:1,8", "threetriangles.el", "--cap-tuples", "100")
    assert code == 2 and rep["certificate"]["verdict"] == "undecided"


def test_input_errors(in_fixtures, capsys):
    assert main(["wl", "missing.el"]) == 3
    assert main(["iso", "c6.g6", "c6.g6"]) == 3
    assert main(["iso", "circ:6:1,5", "c6.g6"]) == 3
    assert main(["scheme", "circ:4:0,1"]) == 3
    err = capsys.readouterr().err
    assert "wlcirc: error" in err


def test_timing_flag(capsys):
    _, rep = run_json(capsys, "wl", "circ:5:1,4", "--timing")
    assert "seconds" in rep
    _, rep = run_json(capsys, "wl", "circ:5:1,4")
    assert "seconds" not in rep


def test_graph_digest_ignores_arc_order():
    assert graph_digest(cycle(5)) == graph_digest(cycle(5))
    assert graph_digest(cycle(5)) != graph_digest(cycle(6))


# ---------------------------------------------------------------- batch


def write_manifest(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n")
    return path


ISO_JOBS = [
    json.dumps({"id": "a", "command": "iso", "inputs": ["circ:8:1,2,7", str(FIXTURES / "circ8b.el")]}),
    json.dumps({"id": "b", "command": "iso", "inputs": ["circ:9:1,8", str(FIXTURES / "threetriangles.el")]}),
    json.dumps({"id": "c", "command": "iso", "inputs": ["circ:4:1,3", str(FIXTURES / "self.el")]}),
]


def test_batch_caches_and_reruns(tmp_path):
    manifest = write_manifest(tmp_path / "jobs.jsonl", ["# three iso jobs", *ISO_JOBS])
    cache = tmp_path / "cache"
    entries, summary = run_batch(str(manifest), str(cache))
    assert summary == {"jobs": 3, "ok": 3, "errors": 0, "cache_hits": 0, "isomorphic": 2, "non_isomorphic": 1}
    assert len(list(cache.rglob("*.json"))) == 3
    again, summary2 = run_batch(str(manifest), str(cache))
    assert summary2["cache_hits"] == 3
    for a, b in zip(entries, again):
        assert a["report"] == b["report"] and a["exit"] == b["exit"]


def test_cache_hit_equals_fresh_run(tmp_path):
    manifest = write_manifest(tmp_path / "jobs.jsonl", ISO_JOBS[:1])
    run_batch(str(manifest), str(tmp_path / "c1"))
    hit, _ = run_batch(str(manifest), str(tmp_path / "c1"))
    fresh, _ = run_batch(str(manifest), str(tmp_path / "c2"))
    assert json.dumps(hit[0]["report"], sort_keys=True) == json.dumps(fresh[0]["report"], sort_keys=True)
    key = hit[0]["key"]
    assert Cache(tmp_path / "c1").get(key) == Cache(tmp_path / "c2").get(key)


def test_batch_isolates_malformed_job(tmp_path):
    lines = [ISO_JOBS[0], "{not json", ISO_JOBS[1]]
    manifest = write_manifest(tmp_path / "jobs.jsonl", lines)
    entries, summary = run_batch(str(manifest), str(tmp_path / "cache"))
    assert summary["ok"] == 2 and summary["errors"] == 1
    assert [e["status"] for e in entries] == ["ok", "error", "ok"]
    assert entries[1]["line"] == 2


def test_batch_bad_jobs(tmp_path):
    lines = [
        json.dumps({"command": "frobnicate", "inputs": ["circ:4:1"]}),
        json.dumps({"command": "iso", "inputs": ["circ:4:1"]}),
        json.dumps({"command": "wl", "inputs": ["nowhere.el"]}),
        json.dumps({"command": "scheme", "inputs": ["circ:5:1,4"]}),
    ]
    manifest = write_manifest(tmp_path / "jobs.jsonl", lines)
    entries, summary = run_batch(str(manifest), str(tmp_path / "cache"))
    assert [e["status"] for e in entries] == ["error", "error", "error", "ok"]


def test_batch_relative_paths(tmp_path):
    (tmp_path / "g.el").write_text((FIXTURES / "self.el").read_text())
    manifest = write_manifest(tmp_path / "jobs.jsonl", [json.dumps({"command": "iso", "inputs": ["circ:4:1,3", "g.el"]})])
    entries, summary = run_batch(str(manifest), str(tmp_path / "cache"))
    assert summary["isomorphic"] == 1


def test_batch_cli_env_cache(tmp_path, monkeypatch, capsys):
    manifest = write_manifest(tmp_path / "jobs.jsonl", ISO_JOBS)
    monkeypatch.setenv("WLCIRC_CACHE", str(tmp_path / "envcache"))
    assert main(["batch", str(manifest)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 4
    assert json.loads(out[-1])["summary"]["jobs"] == 3
    assert (tmp_path / "envcache").is_dir()
    assert main(["batch", str(manifest), "--cache-dir", str(tmp_path / "flag")]) == 0
    capsys.readouterr()
    assert (tmp_path / "flag").is_dir()


def test_batch_error_exit(tmp_path, capsys):
    manifest = write_manifest(tmp_path / "jobs.jsonl", ["[]"])
    assert main(["batch", str(manifest), "--cache-dir", str(tmp_path / "c")]) == 3
    capsys.readouterr()


def test_batch_parallel_matches_serial(tmp_path):
    manifest = write_manifest(tmp_path / "jobs.jsonl", ISO_JOBS)
    serial, _ = run_batch(str(manifest), str(tmp_path / "s"))
    par, _ = run_batch(str(manifest), str(tmp_path / "p"), jobs=2)
    assert [e["report"] for e in serial] == [e["report"] for e in par]


def test_module_entry_point(tmp_path):
    env = dict(os.environ, WLCIRC_CACHE=str(tmp_path / "c"))
    out = subprocess.run(
        [sys.executable, "-m", "wlcirc", "scheme", "circ:4:1,3", "--json"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout == (GOLDEN / "scheme_circ4_13.json").read_text()
