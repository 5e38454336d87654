import csv
import json

import pytest

from planarbcast.cli import SUMMARY_COLUMNS, ExperimentConfig, main
from planarbcast.graph import grid_patch, octahedron, torus
from planarbcast.adversary import ConfigError

BASE = {
    "topology": {"kind": "quadrangulation", "params": {"n": 8}},
    "placement": {"count": 2, "min_distance": 5},
    "strategy": {"name": "forge_flood", "forge_count": 8},
    "policy": "random",
    "seeds": [0, 1, 2],
    "verify": ["safety", "liveness", "time_bound", "correct_polygons"],
}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_passes_and_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", write(tmp_path, BASE), "--out", str(out)]) == 0
    rows = read_rows(out / "summary.csv")
    assert [r["seed"] for r in rows] == ["0", "1", "2"]
    assert list(rows[0]) == SUMMARY_COLUMNS
    assert all(r["delivered_fraction"] == "1.0" and r["verifications_passed"] == "4/4"
               for r in rows)
    assert float(rows[0]["D"]) >= 5
    for seed in (0, 1, 2):
        assert main(["replay", str(out / f"run-{seed}.jsonl")]) == 0
    assert "identical" in capsys.readouterr().out


def test_summary_is_append_safe(tmp_path):
    out = tmp_path / "out"
    cfg = write(tmp_path, BASE)
    main(["run", cfg, "--out", str(out), "--seed", "4"])
    main(["run", cfg, "--out", str(out), "--seed", "4"])
    rows = read_rows(out / "summary.csv")
    assert len(rows) == 2 and rows[0] == rows[1]


def test_parallel_jobs_match_serial(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cfg = write(tmp_path, BASE)
    main(["run", cfg, "--out", str(a)])
    main(["run", cfg, "--out", str(b), "--jobs", "3"])
    assert (a / "summary.csv").read_text() == (b / "summary.csv").read_text()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PLANARBCAST_OUT", str(tmp_path / "envout"))
    assert main(["run", write(tmp_path, dict(BASE, seeds=[0]))]) == 0
    assert (tmp_path / "envout" / "summary.csv").exists()


def test_assertion_failure_exit_code(tmp_path):
    # Byzantine nodes next to each other and the flood protocol: safety breaks
    cfg = dict(BASE, protocol="flood", placement={"count": 4, "min_distance": 1, "source": 0},
               seeds=[0, 1, 2, 3], verify=["safety"])
    assert main(["run", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1


def test_infeasible_exit_code(tmp_path):
    cfg = dict(BASE, placement={"count": 2, "min_distance": 50})
    assert main(["run", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 3


@pytest.mark.parametrize("cfg", [
    "{not json",
    json.dumps({"placement": {"count": 1}}),
    json.dumps(dict(BASE, policy="chaotic")),
    json.dumps(dict(BASE, strategy={"name": "nope"})),
    json.dumps(dict(BASE, verify=["everything"])),
    json.dumps(dict(BASE, extra=1)),
    json.dumps(dict(BASE, timing={"mode": "interval", "t1": 0, "t2": 1})),
    json.dumps(dict(BASE, topology={"kind": "hypercube"})),
])
def test_config_errors(tmp_path, cfg):
    path = tmp_path / "bad.json"
    path.write_text(cfg)
    assert main(["run", str(path), "--out", str(tmp_path / "o")]) == 2


def test_seed_ranges():
    cfg = ExperimentConfig.from_dict(dict(BASE, seeds={"start": 3, "stop": 6}))
    assert cfg.seeds == [3, 4, 5]
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(dict(BASE, seeds="many"))


def test_analyze(tmp_path, capsys):
    for topo in (octahedron(), torus(5, 5), grid_patch(4, 4)):
        path = tmp_path / f"{topo.label}.json"
        path.write_text(topo.dumps())
        assert main(["analyze", str(path)]) == 0
    out = capsys.readouterr().out
    octa, tor, grid = out.split("label: ")[1:]
    assert "Z: 3" in octa and "Y: 4" in octa and "four_connected: True" in octa
    assert "planar: False" in tor and "Z_source: declared" in tor
    assert "four_connected: False" in grid and "cut: [" in grid


def test_analyze_bad_file(tmp_path):
    path = tmp_path / "x.json"
    path.write_text('{"rotation": [[1], []]}')
    assert main(["analyze", str(path)]) == 2
    assert main(["analyze", str(tmp_path / "missing.json")]) == 2


def test_counterexample_is_deterministic(tmp_path, capsys):
    assert main(["counterexample", "--out", str(tmp_path / "a")]) == 0
    assert main(["counterexample", "--out", str(tmp_path / "b")]) == 0
    out = capsys.readouterr().out
    assert "indistinguishable: True" in out and "Z=4 D=4" in out
    for name in ("critical.json", "run-a.jsonl", "run-b.jsonl"):
        a = (tmp_path / "a" / "counterexample" / name).read_bytes()
        b = (tmp_path / "b" / "counterexample" / name).read_bytes()
        assert a == b
    crit = tmp_path / "a" / "counterexample" / "critical.json"
    assert main(["analyze", str(crit)]) == 0
    assert "four_connected: True" in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path):
    out = tmp_path / "out"
    main(["run", write(tmp_path, dict(BASE, seeds=[0])), "--out", str(out)])
    path = out / "run-0.jsonl"
    lines = path.read_text().splitlines()
    rec = json.loads(lines[2])
    rec[0] += 1
    lines[2] = json.dumps(rec)
    path.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(path)]) == 1
