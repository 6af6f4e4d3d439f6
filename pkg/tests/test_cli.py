import csv
import json
import subprocess
import sys
import xml.dom.minidom
from pathlib import Path

import jsonschema
import pytest

from sublinconc import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_bounds_sweep(tmp_path):
    code = cli.main(["bounds", "--config", str(CONFIGS / "bounds.json"), "--out", str(tmp_path)])
    assert code == 0
    table = rows(tmp_path / "bounds.csv")
    assert len(table) == 30
    for name in ("azuma", "bernstein", "dimfree"):
        col = [float(r["clamped"]) for r in table if r["bound_name"] == name]
        assert all(b <= a for a, b in zip(col, col[1:]))
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert {"config", "seed", "versions", "wall_time_s"} <= set(manifest)


def test_bounds_flag_overrides_and_dimfree_dominance(tmp_path):
    code = cli.main(["bounds", "--config", str(CONFIGS / "bounds.json"), "--d", "3", "--out", str(tmp_path)])
    assert code == 0
    table = rows(tmp_path / "bounds.csv")
    assert {r["d"] for r in table} == {"3"}
    raw = {(r["bound_name"], r["t"]): float(r["raw"]) for r in table}
    for (name, t), value in raw.items():
        if name == "dimfree":
            assert value <= raw[("bernstein", t)]


@pytest.mark.parametrize("argv", [
    ["bounds", "--n", "1000", "--d", "1", "--M", "1", "--sigma-sq", "0.25", "--t-grid", ""],
    ["bounds", "--n", "1000", "--d", "1", "--M", "1", "--sigma-sq", "0.25", "--t-grid", "0.2,0.1"],
    ["bounds", "--n", "1000", "--d", "1", "--M", "-1", "--sigma-sq", "0.25", "--t-grid", "0.1"],
    ["simulate", "--n", "100", "--replicates", "2000"],
    ["sharpness", "--sigma", "1"],
    ["net", "--d", "9", "--seed", "0"],
    ["net", "--d", "2"],
])
def test_config_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2
    assert "config error" in capsys.readouterr().err


def test_empty_space_list_exits_2(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"spaces": []}))
    assert cli.main(["oracle", "--config", str(cfg)]) == 2


def test_unreadable_config_exits_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["bounds", "--config", str(bad)]) == 2


def test_simulate_is_byte_identical(tmp_path):
    cfg = tmp_path / "sim.json"
    cfg.write_text(json.dumps({
        "family": {"kind": "uniform_shift", "a": 1.0, "r": 0.5},
        "n": 500, "t_grid": [0.005, 0.01, 0.02, 0.05], "replicates": 4000, "seed": 5,
    }))
    outs = []
    for k, workers in enumerate(("1", "3")):
        out = tmp_path / f"run{k}"
        assert cli.main(["simulate", "--config", str(cfg), "--workers", workers, "--out", str(out)]) == 0
        outs.append(out)
    for name in ("sandwich.csv", "sandwich.svg"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    xml.dom.minidom.parse(str(outs[0] / "sandwich.svg"))
    table = rows(outs[0] / "sandwich.csv")
    assert all(r["upper_ok"] == "1" and r["lower_ok"] == "1" for r in table)
    assert json.loads((outs[0] / "manifest.json").read_text())["seed"] == 5


def test_sharpness_command(tmp_path):
    code = cli.main(["sharpness", "--sigma", "1", "--n-grid", "100,400", "--replicates", "20000",
                     "--seed", "3", "--out", str(tmp_path)])
    assert code == 0
    table = rows(tmp_path / "sharpness.csv")
    assert [r["n"] for r in table] == ["100", "400"]
    assert all(float(r["ci_hi"]) >= float(r["lower"]) for r in table)
    xml.dom.minidom.parse(str(tmp_path / "sharpness.svg"))


def test_oracle_report_schema_and_verdicts(tmp_path):
    assert cli.main(["oracle", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "oracle_report.json").read_text())
    jsonschema.validate(report, cli.REPORT_SCHEMA)
    by_name = {s["name"]: s for s in report["spaces"]}
    assert set(by_name) == {"trivial", "shifted_uniform", "negative_control"}
    assert not by_name["negative_control"]["checks"]["independence"]["passed"]
    assert by_name["shifted_uniform"]["checks"]["independence"]["passed"]
    assert all(s["verdict_ok"] for s in report["spaces"])


def test_oracle_flags_unexpected_verdict(tmp_path):
    record = json.loads(json.dumps(cli.orc.space_to_dict(cli.orc.load_space("negative_control"))))
    record["expect"]["independence"] = True
    path = tmp_path / "wrong.json"
    path.write_text(json.dumps(record))
    assert cli.main(["oracle", "--space", str(path), "--out", str(tmp_path / "o")]) == 1


def test_net_command(tmp_path):
    assert cli.main(["net", "--d", "1", "--seed", "0", "--out", str(tmp_path / "d1")]) == 0
    assert len(rows(tmp_path / "d1" / "net.csv")) == 2
    assert cli.main(["net", "--d", "2", "--seed", "0", "--out", str(tmp_path / "d2")]) == 0
    summary = json.loads((tmp_path / "d2" / "net_summary.json").read_text())
    assert summary["size"] <= 25 and summary["radius_ok"]


def test_stdout_mode_and_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "sublinconc", "bounds", "--n", "100", "--d", "1", "--M", "1",
         "--sigma-sq", "0.1", "--t-grid", "0.1:0.5:3"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("bound_name,n,d")
    assert len(proc.stdout.splitlines()) == 10
