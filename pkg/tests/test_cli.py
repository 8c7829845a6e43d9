import json
import math
import subprocess
import sys

import pytest

from funcgen.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, OUT_ENV, load_config, main, packaged_scenarios, resolve


def _write(tmp_path, cfg, name="cfg.json"):
    f = tmp_path / name
    f.write_text(json.dumps(cfg))
    return str(f)


SMALL = {
    "name": "small",
    "model": {"kind": "two_asset_martingale", "sigma": 1.0},
    "simulation": {"horizon": 4.0, "steps": 512, "seed": 0, "ensemble_size": 60},
    "generator": {"kind": "entropy"},
    "mode": "both",
    "diagnostics": {"holdings": True, "portfolio_weights": True,
                    "outperformance": {"T_star": [2.0, 4.0], "epsilon": 0.1}},
    "output": {"csv_paths": 2},
}


def test_packaged_scenarios_resolve():
    names = packaged_scenarios()
    assert "entropy_two_asset" in names
    for n in names:
        resolve(load_config(n))


def test_entropy_two_asset_end_to_end(tmp_path):
    assert main(["generate", "--config", "entropy_two_asset", "--out", str(tmp_path)]) == EXIT_OK
    csv = (tmp_path / "entropy_two_asset_path0.csv").read_text().splitlines()
    assert csv[0].startswith("# config: {") and csv[1] == "# seed: 0"
    assert csv[3] == "t,mu_1,mu_2,gamma,v_additive,v_multiplicative,phi_1,phi_2,psi_1,psi_2,pi_1,pi_2"
    s = json.loads((tmp_path / "entropy_two_asset_summary.json").read_text())
    assert s["seed"] == 0 and s["config"]["name"] == "entropy_two_asset"
    assert s["residuals"]["identity_G_plus_gamma"] < 1e-12
    assert s["residuals"]["identity_self_financing"] < 1e-12
    fr = [r["fraction_condition"] for r in s["outperformance"] if r["mode"] == "additive"]
    assert fr == sorted(fr)


def test_csv_number_format(tmp_path):
    assert main(["generate", "--config", _write(tmp_path, SMALL), "--out", str(tmp_path)]) == EXIT_OK
    row = (tmp_path / "small_path0.csv").read_text().splitlines()[5].split(",")
    for x in row:
        assert float(x) == float(format(float(x), ".17g"))
        assert "," not in x and " " not in x


def test_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, SMALL)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["generate", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["generate", "--config", cfg, "--out", str(b)]) == EXIT_OK
    assert main(["generate", "--config", cfg, "--out", str(c), "--threads", "4"]) == EXIT_OK
    for f in ("small_path0.csv", "small_path1.csv", "small_summary.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes() == (c / f).read_bytes()


def test_seed_override(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "a"), "--seed-override", "7"]) == EXIT_OK
    s = json.loads((tmp_path / "a" / "small_summary.json").read_text())
    assert s["seed"] == 7 and "# seed: 7" in (tmp_path / "a" / "small_path0.csv").read_text()


def test_quadratic_c_validation(tmp_path, capsys):
    cfg = {"name": "q", "generator": {"kind": "quadratic", "params": {"c": 1.0}}, "mode": "multiplicative"}
    assert main(["generate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_INVALID
    assert "c > 1" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [
    {"name": "x", "bogus": 1},
    {"name": "x", "model": {"kind": "gbm", "colour": 1}},
    {"name": "x", "model": {"kind": "gbm", "initial_caps": [1.0, -1.0]}},
    {"name": "x", "model": {"kind": "two_asset_martingale", "initial_caps": [1, 1, 1]}},
    {"name": "x", "generator": {"kind": "large_cap", "params": {"m": 2}}},
    {"name": "x", "simulation": {"steps": 0}},
    {"name": "x", "diagnostics": {"outperformance": {"T_star": [5.0]}}},
])
def test_invalid_configs_exit_2(tmp_path, cfg):
    assert main(["generate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_INVALID


def test_missing_and_malformed_config(tmp_path):
    assert main(["generate", "--config", str(tmp_path / "nope.json")]) == EXIT_INVALID
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    assert main(["generate", "--config", str(f)]) == EXIT_INVALID


def test_runtime_error_exit_3(tmp_path, capsys):
    cfg = {"name": "g", "model": {"kind": "absorbed_brownian_pair"},
           "simulation": {"horizon": 4.0, "steps": 256, "ensemble_size": 20},
           "generator": {"kind": "geometric_mean"}, "mode": "multiplicative"}
    assert main(["generate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_RUNTIME
    assert "time index" in capsys.readouterr().err


def test_env_default_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "envout"))
    assert main(["simulate", "--config", _write(tmp_path, SMALL)]) == EXIT_OK
    assert (tmp_path / "envout" / "small_weights_path0.csv").exists()
    assert (tmp_path / "envout" / "small_simulate.json").exists()


def test_counterexample_command(tmp_path):
    cfg = {"name": "osc", "model": {"kind": "oscillator_counterexample"},
           "counterexample": {"n_max_list": [10, 100], "qv_paths": 50, "qv_steps": 64}}
    assert main(["counterexample", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "osc_variation.csv").read_text().splitlines()
    assert rows[2] == "n_max,tv_x,tv_x_bound,tv_sqrt_x,tv_sqrt_x_lower_bound" and len(rows) == 5


def test_outperform_command(tmp_path):
    assert main(["outperform", "--config", _write(tmp_path, SMALL), "--out", str(tmp_path)]) == EXIT_OK
    s = json.loads((tmp_path / "small_summary.json").read_text())
    assert len(s["outperformance"]) == 4 and "csv_files" not in s


def test_report(tmp_path, capsys):
    outs = []
    for seed in (0, 1):
        cfg = dict(SMALL, simulation=dict(SMALL["simulation"], seed=seed, ensemble_size=300, horizon=8.0),
                   diagnostics={"outperformance": {"T_star": [8.0]}}, mode="additive")
        d = tmp_path / f"s{seed}"
        assert main(["outperform", "--config", _write(tmp_path, cfg), "--out", str(d)]) == EXIT_OK
        outs.append(str(d / "small_summary.json"))
    single = tmp_path / "r1"
    assert main(["report", outs[0], "--out", str(single)]) == EXIT_OK
    r1 = json.loads((single / "report.json").read_text())
    s0 = json.loads(open(outs[0]).read())
    assert r1["merged"][0]["fraction_condition"] == s0["outperformance"][0]["fraction_condition"]
    assert main(["report", *outs, "--out", str(tmp_path / "r2")]) == EXIT_OK
    r2 = json.loads((tmp_path / "r2" / "report.json").read_text())
    f = [r["fraction_condition"] for r in r2["rows"]]
    p = sum(f) / 2
    band = 3 * math.sqrt(max(p * (1 - p), 1e-4) * (2 / 300))
    assert abs(f[0] - f[1]) <= band
    assert r2["merged"][0]["paths"] == 600
    assert main(["report", "--out", str(tmp_path / "r3")]) == EXIT_INVALID
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": 1}')
    capsys.readouterr()
    assert main(["report", str(bad), "--out", str(tmp_path / "r4")]) == EXIT_INVALID
    assert "bad.json" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "funcgen", "scenarios"], capture_output=True, text=True)
    assert r.returncode == 0 and "entropy_two_asset" in r.stdout
