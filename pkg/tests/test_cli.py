from __future__ import annotations

import json
import math
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from dcebound import cli
from dcebound.reporting import read_csv
from dcebound.scenario import dump_config

SCHEMAS = Path(cli.__file__).parent / "schemas"
ORACLE = {k: float(v) for k, v in json.loads(
    (Path(__file__).parent / "data" / "oracle_values.json").read_text()).items()}


def schema(name):
    return json.loads((SCHEMAS / f"{name}.schema.json").read_text())


def check(path: Path, name: str) -> dict:
    data = json.loads(path.read_text())
    jsonschema.validate(data, schema(name))
    return data


def run(*argv) -> int:
    return cli.main([str(a) for a in argv])


def write_conf(tmp_path, scenario, name="s.conf", **changes) -> Path:
    path = tmp_path / name
    path.write_text(dump_config(scenario.replace(**changes)))
    return path


def test_simulate_outputs(tmp_path):
    out = tmp_path / "sim"
    assert run("simulate", "--config", "nondimensional", "--out-dir", out, "--seed", 3) == 0
    header, noise = read_csv(out / "noise.csv")
    assert header == ["t", "delta_p"] and noise.shape == (1001, 2)
    header, traj = read_csv(out / "trajectory.csv")
    assert header == ["t", "x", "v", "a"]
    side = check(out / "noise.json", "noise_sidecar")
    assert side["seed"] == 3 and side["params"] == {"variance": 1.0, "rate": 0.5}
    manifest = check(out / "simulate_manifest.json", "manifest")
    assert manifest["outputs"] == ["noise.csv", "noise.json", "trajectory.csv"]
    assert manifest["argv"][0] == "simulate"


def test_zero_noise_simulation_decays(tmp_path, nondim):
    conf = write_conf(tmp_path, nondim, noise_variance=0.0, initial_velocity=1.5, plate_gamma=0.4)
    assert run("simulate", "--config", conf, "--out-dir", tmp_path / "o") == 0
    _, traj = read_csv(tmp_path / "o" / "trajectory.csv")
    np.testing.assert_allclose(traj[:, 2], 1.5 * np.exp(-0.4 * traj[:, 0]), rtol=1e-9)


def test_json_format_tables(tmp_path):
    assert run("simulate", "--config", "nondimensional", "--out-dir", tmp_path, "--format", "json") == 0
    data = check(tmp_path / "trajectory.json", "table")
    assert set(data["columns"]) == {"t", "x", "v", "a"}


def test_photons_matches_oracle(tmp_path):
    assert run("photons", "--config", "nondimensional", "--out-dir", tmp_path, "--k-max", 2) == 0
    rates = check(tmp_path / "rates.json", "rates")
    assert rates["total"]["rate"] == pytest.approx(ORACLE["total_rate_unit_variance"], rel=1e-12)
    assert [m["k"] for m in rates["modes"]] == [1, 2]
    _, spectrum = read_csv(tmp_path / "spectrum.csv")
    row = spectrum[(spectrum[:, 0] == 1) & (spectrum[:, 1] == 2)][0]
    assert row[2] == pytest.approx(ORACLE["photon_number_n2_k1_unit_variance"], rel=1e-12)


def test_photons_zero_temperature(tmp_path, nondim):
    raw = dict(nondim.source)
    raw.pop("noise_variance")
    conf = tmp_path / "cold.conf"
    conf.write_text(dump_config(nondim.replace(**raw).replace(temperature=0.0)).replace("noise_variance = 1\n", ""))
    assert run("photons", "--config", conf, "--out-dir", tmp_path) == 0
    rates = json.loads((tmp_path / "rates.json").read_text())
    assert rates["total"]["rate"] == 0.0
    assert all(m["rate"] == 0.0 for m in rates["modes"])


def test_photons_positivity_grid(tmp_path):
    assert run("photons", "--config", "nondimensional", "--out-dir", tmp_path, "--positivity-grid") == 0
    text = (tmp_path / "positivity.csv").read_text().splitlines()
    assert text[0] == "lambda_over_gamma,gamma_t1,log10_total_rate,positive"
    assert len(text) == 251 and all(line.endswith(",true") for line in text[1:])


def test_bound_report_and_regimes(tmp_path, capsys):
    assert run("bound", "--config", "nondimensional", "--out-dir", tmp_path) == 0
    rep = check(tmp_path / "bound.json", "bound")
    assert rep["log10_sigma_limit"] == pytest.approx(ORACLE["log10_bound_general"], rel=1e-12)
    assert rep["inputs"]["final_position_x0"] == 1.0
    assert run("bound", "--config", "nondimensional", "--out-dir", tmp_path, "--regime", "fast") == 0
    assert "warning" in capsys.readouterr().err
    rep = check(tmp_path / "bound.json", "bound")
    assert rep["regime"] == "FAST_RELAXATION" and rep["warnings"]


def test_bound_self_consistent_trace(tmp_path):
    assert run("bound", "--config", "paper_sec4", "--out-dir", tmp_path, "--regime", "slow") == 0
    rep = check(tmp_path / "bound.json", "bound")
    assert rep["regime"] == "SLOW_RELAXATION"
    assert rep["fixed_point_trace"]["decoupled"] is False
    assert rep["inputs"]["plate_area"] == 0.01 and rep["inputs"]["final_position_x0"] == 0.025


def test_bound_auto(tmp_path, nondim):
    conf = write_conf(tmp_path, nondim, noise_rate=50.0)
    assert run("bound", "--config", conf, "--out-dir", tmp_path, "--regime", "auto") == 0
    assert json.loads((tmp_path / "bound.json").read_text())["regime"] == "FAST_RELAXATION"


def test_sweep(tmp_path, lab):
    conf = write_conf(tmp_path, lab, wall_reflectivity=0.999)
    assert run("sweep", "--config", conf, "--param", "T", "--from", 100, "--to", 600,
               "--points", 11, "--regime", "slow", "--out-dir", tmp_path) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "param,log10_sigma_limit,regime"
    values = [float(line.split(",")[1]) for line in lines[1:]]
    assert len(values) == 11 and all(b < a for a, b in zip(values, values[1:]))
    assert float(lines[-1].split(",")[0]) == 600.0


def test_single_point_sweep_equals_bound(tmp_path):
    assert run("sweep", "--config", "nondimensional", "--param", "T", "--from", 1, "--to", 1,
               "--points", 1, "--out-dir", tmp_path) == 0
    assert run("bound", "--config", "nondimensional", "--out-dir", tmp_path) == 0
    swept = float((tmp_path / "sweep.csv").read_text().splitlines()[1].split(",")[1])
    assert swept == json.loads((tmp_path / "bound.json").read_text())["log10_sigma_limit"]


def test_log_sweep_of_101_points_is_fast(tmp_path):
    import time
    start = time.perf_counter()
    assert run("sweep", "--config", "paper_sec4", "--param", "T", "--from", 100, "--to", 600,
               "--points", 101, "--log", "--out-dir", tmp_path) == 0
    assert time.perf_counter() - start < 60
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 102


def test_sweep_unknown_parameter(tmp_path):
    assert run("sweep", "--config", "nondimensional", "--param", "mass", "--from", 1, "--to", 2,
               "--out-dir", tmp_path) == cli.EXIT_CONFIG


def test_validate_noise_and_check_dir(tmp_path):
    sim = tmp_path / "sim"
    assert run("simulate", "--config", "nondimensional", "--out-dir", sim) == 0
    assert run("validate", "--config", "nondimensional", "--suite", "noise", "--paths", 512,
               "--check-dir", sim, "--out-dir", tmp_path) == 0
    rep = check(tmp_path / "validation.json", "validation")
    assert rep["verdict"] == "pass" and rep["file_check"]["verdict"] == "pass"


def test_validate_detects_tampered_outputs(tmp_path):
    sim = tmp_path / "sim"
    assert run("simulate", "--config", "nondimensional", "--out-dir", sim) == 0
    lines = (sim / "trajectory.csv").read_text().splitlines()
    t, x, v, a = lines[10].split(",")
    lines[10] = ",".join([t, x, repr(float(v) + 1e-3), a])
    (sim / "trajectory.csv").write_text("\n".join(lines) + "\n")
    assert run("validate", "--config", "nondimensional", "--suite", "noise", "--paths", 64,
               "--check-dir", sim, "--out-dir", tmp_path) == cli.EXIT_VALIDATION


def test_validate_zero_variance(tmp_path, nondim):
    conf = write_conf(tmp_path, nondim, noise_variance=0.0)
    assert run("validate", "--config", conf, "--suite", "noise", "--paths", 64, "--out-dir", tmp_path) == 0
    rep = check(tmp_path / "validation.json", "validation")
    assert rep["degenerate_variance"] is True and rep["verdict"] == "pass"


def test_validate_dynamics_tables(tmp_path):
    assert run("validate", "--config", "nondimensional", "--suite", "dynamics", "--paths", 1024,
               "--out-dir", tmp_path) == 0
    rep = check(tmp_path / "validation.json", "validation")
    kinds = {r["kind"] for r in rep["results"]}
    assert kinds == {"oracle", "printed"}
    assert all(r["verdict"] == "pass" for r in rep["results"] if r["kind"] == "oracle")
    header = (tmp_path / "covariance_velocity_0.csv").read_text().splitlines()[0]
    assert header == "t,t_prime,printed_value,oracle_value,mc_value,mc_stderr"


def test_validate_failure_exit_status(tmp_path):
    assert run("validate", "--config", "nondimensional", "--suite", "noise", "--paths", 256,
               "--threshold", 0.001, "--out-dir", tmp_path) == cli.EXIT_VALIDATION
    assert json.loads((tmp_path / "validation.json").read_text())["verdict"] == "fail"


def test_config_errors(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("lx = -1\nly = 1\nlz = 1\nplate_mass = 1\ntemperature = 1\nduration = 1\n")
    assert run("validate", "--config", bad, "--out-dir", tmp_path) == cli.EXIT_CONFIG
    assert run("bound", "--config", "does-not-exist", "--out-dir", tmp_path) == cli.EXIT_CONFIG
    garbled = tmp_path / "garbled.conf"
    garbled.write_text("this is not a config\n")
    assert run("simulate", "--config", garbled, "--out-dir", tmp_path) == cli.EXIT_CONFIG


def test_numeric_failure_exit(tmp_path, lab):
    # without thermal noise the bound is infinite, so it never meets sigma
    conf = write_conf(tmp_path, lab, temperature=0.0)
    assert run("bound", "--config", conf, "--out-dir", tmp_path, "--self-consistent") == cli.EXIT_NUMERIC


def test_every_csv_has_header(tmp_path):
    run("simulate", "--config", "nondimensional", "--out-dir", tmp_path)
    run("photons", "--config", "nondimensional", "--out-dir", tmp_path)
    for path in tmp_path.glob("*.csv"):
        first = path.read_text().splitlines()[0]
        assert not any(ch.isdigit() for ch in first.split(",")[0]), path
