import json
import subprocess
import sys

import pytest

from carbonscope import analysis, cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_estimate_text(capsys):
    code, out, _ = run(capsys, "estimate", "--scenario", "dnn")
    assert code == cli.EXIT_OK
    assert "ASIC" in out and "FPGA" in out and "total" in out


def test_estimate_json(capsys):
    code, out, _ = run(capsys, "estimate", "--scenario", "dnn", "--format", "json", "--platform", "FPGA")
    assert code == 0
    data = json.loads(out)
    (entry,) = data["platforms"].values() if "platforms" in data else data.values()
    parts = sum(entry[k] for k in ("design", "manufacturing", "package", "test", "retire", "memory",
                                   "eol_replacement", "operational", "reconfiguration"))
    assert parts == pytest.approx(entry["total"], rel=1e-9)


def test_estimate_mc(capsys):
    code, out, _ = run(capsys, "estimate", "--scenario", "dnn", "--mode", "mc", "--n-samples", "200",
                       "--seed", "3")
    assert code == 0 and "seed=3" in out and "stddev" in out


def test_compare_reports_crossover(capsys):
    code, out, _ = run(capsys, "compare", "--scenario", "dnn")
    assert code == 0
    assert "crossover at n_app=3" in out


def test_sweep_csv_and_sidecar(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--scenario", "dnn", "--out-dir", str(tmp_path))
    assert code == 0
    cols = analysis.read_csv_columns(tmp_path / "sweep.csv")
    assert [x for x in cols["crossing"] if x != ""] == [3.0]
    meta = json.loads((tmp_path / "sweep.meta.json").read_text())
    assert meta["mode"] == "expected" and meta["variable"] == "n_app"
    assert len(meta["config_hash"]) == 64
    assert "n_app crossing at 3" in out


def test_sweep_json(tmp_path, capsys):
    code, _, _ = run(capsys, "sweep", "--scenario", "dnn", "--format", "json", "--out-dir", str(tmp_path),
                     "--var", "n_app", "--grid", "1,2,3,4,5")
    assert code == 0
    data = json.loads((tmp_path / "sweep.json").read_text())
    assert data["x"] == [1.0, 2.0, 3.0, 4.0, 5.0]
    assert data["crossings"][0]["x"] == 3.0


def test_seed_override_recorded_and_reproducible(tmp_path, capsys):
    args = ["sweep", "--scenario", "dnn", "--mode", "mc", "--n-samples", "300", "--grid", "1,3,5", "--var",
            "n_app"]
    for sub, seed in (("a", "11"), ("b", "11"), ("c", "12")):
        assert run(capsys, *args, "--seed", seed, "--out-dir", str(tmp_path / sub))[0] == 0
    meta = json.loads((tmp_path / "a" / "sweep.meta.json").read_text())
    assert meta["seed"] == 11 and meta["mode"] == "mc"
    a, b, c = ((tmp_path / s / "sweep.csv").read_bytes() for s in "abc")
    assert a == b and a != c


def test_set_override(tmp_path, capsys):
    run(capsys, "sweep", "--scenario", "dnn", "--out-dir", str(tmp_path / "x"))
    code, _, _ = run(capsys, "sweep", "--scenario", "dnn", "--set", "scenario.n_vol=2000000",
                     "--out-dir", str(tmp_path / "y"))
    assert code == 0
    mx = json.loads((tmp_path / "x" / "sweep.meta.json").read_text())
    my = json.loads((tmp_path / "y" / "sweep.meta.json").read_text())
    assert my["overrides"] == ["scenario.n_vol=2000000"]
    assert mx["config_hash"] != my["config_hash"]


def test_heatmap(tmp_path, capsys):
    code, out, _ = run(capsys, "heatmap", "--scenario", "dnn", "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "heatmap.csv").exists() and (tmp_path / "locus.csv").exists()
    assert "locus points" in out


def test_prob(tmp_path, capsys):
    code, _, _ = run(capsys, "prob", "--scenario", "dnn", "--n-samples", "500", "--grid", "1,5",
                     "--var", "n_app", "--out-dir", str(tmp_path))
    assert code == 0
    cols = analysis.read_csv_columns(tmp_path / "prob.csv")
    assert cols["x"] == [1.0, 5.0]
    assert cols["p_a_less_b"][0] < 0.5 < cols["p_a_less_b"][1]


def test_validate_passes(capsys):
    code, out, _ = run(capsys, "validate")
    assert code == cli.EXIT_OK
    lines = out.strip().splitlines()
    assert len(lines) == 3 and all(line.startswith("PASS") for line in lines)


def test_validate_failure_exit_code(capsys, monkeypatch):
    bad = dict(cli.VALIDATION_CASES)
    bad["h100"] = ("industry_h100", (cli.Target("embodied_kg", 1000.0, 0.15, True, "embodied"),))
    monkeypatch.setattr(cli, "VALIDATION_CASES", bad)
    code, out, _ = run(capsys, "validate", "--case", "h100")
    assert code == cli.EXIT_VALIDATION
    assert out.startswith("FAIL")


@pytest.mark.parametrize("argv", [
    ["estimate", "--scenario", "does_not_exist"],
    ["sweep", "--scenario", "dnn", "--set", "platforms[0].technology.recycled_fraction_rho=1.3"],
    ["sweep", "--scenario", "dnn", "--var", "t_i"],
    ["sweep", "--scenario", "dnn", "--var", "n_app", "--grid", "1,x"],
    ["estimate", "--scenario", "dnn", "--mode", "mc", "--n-samples", "0"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == cli.EXIT_CONFIG
    assert err.startswith("carbonscope: error:")


def test_bad_rho_names_field(capsys):
    _, _, err = run(capsys, "estimate", "--scenario", "dnn", "--set",
                    "platforms[0].technology.recycled_fraction_rho=1.3")
    assert "technology.recycled_fraction_rho" in err


def test_oracle_aging(capsys):
    code, out, _ = run(capsys, "oracle", "aging", "--t", "2", "--steps", "100000")
    assert code == 0 and "rel err" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "carbonscope.cli", "validate", "--format", "json"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert set(json.loads(res.stdout)) == set(cli.VALIDATION_CASES)
