import json

import numpy as np
import pytest

from freejacobi import artifacts, cli


@pytest.fixture(autouse=True)
def fixed_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")


def run(tmp_path, *argv, name="out"):
    path = tmp_path / name
    code = cli.main([*argv, "--out", str(path)])
    return code, path.read_bytes().decode("utf-8")


def test_manifest_round_trip():
    m = artifacts.RunManifest("moments", {"kappa": 0.6, "t": 1.0}, seed=7)
    text = artifacts.csv_text(m, ["n", "x"], [(1, 0.1), (2, 1 / 3)], {"passed": True})
    back, header, rows, summary = artifacts.read_csv(text)
    assert back == m
    assert header == ["n", "x"]
    assert float(rows[1][1]) == 1 / 3
    assert summary == {"passed": True}
    back, body = artifacts.read_json(artifacts.json_text(m, {"v": np.array([0.1, 2 / 3])}))
    assert back == m and body["v"] == [0.1, 2 / 3]


def test_timestamp_honours_source_date_epoch():
    assert artifacts.RunManifest("x", {}).timestamp == "2023-11-14T22:13:20Z"


def test_float_format_round_trips():
    for x in (0.1, 1 / 3, -2.5e-300, 12345.678901234567):
        assert float(artifacts.fmt(x)) == x


def test_missing_manifest_is_rejected():
    with pytest.raises(ValueError):
        artifacts.read_csv("n,x\n1,2\n")


def test_moments_formula_and_ode(tmp_path):
    code, text = run(tmp_path, "moments", "--kappa", "0", "--t", "1", "--n-max", "4", "--sources", "formula,ode")
    assert code == 0
    assert "\r" not in text
    manifest, header, rows, summary = artifacts.read_csv(text)
    assert manifest.command == "moments"
    assert manifest.params["sources"] == ["formula", "ode"]
    assert header == ["n", "u_formula", "u_ode", "j_formula", "j_ode", "discrepancy"]
    assert all(float(r[-1]) < 1e-5 for r in rows)
    assert summary["passed"]


def test_moments_at_time_zero(tmp_path):
    code, text = run(tmp_path, "moments", "--kappa", "0.6", "--t", "0", "--sources", "formula,reversion", "--format", "json")
    assert code == 0
    manifest, body = artifacts.read_json(text)
    assert manifest.params["t"] == 0.0
    assert all(v == 1 for row in body["rows"] for v in row[1:-1])


def test_moments_gate_fails_on_tight_tolerance(tmp_path):
    code, text = run(tmp_path, "moments", "--kappa", "0.3", "--t", "1", "--sources", "formula,ode", "--tol", "1e-20")
    assert code == 1
    assert artifacts.read_csv(text)[3]["passed"] is False


def test_moments_with_small_monte_carlo(tmp_path):
    args = ["--threads", "2", "moments", "--kappa", "0.3", "--t", "0.2", "--sources", "formula,mc"]
    args += ["--seed", "3", "--trials", "4", "--N", "32", "--n-max", "2"]
    code, text = run(tmp_path, *args)
    manifest, header, rows, summary = artifacts.read_csv(text)
    assert manifest.seed == 3 and manifest.params["N"] == 32
    assert "u_mc_se" in header
    assert summary["monte_carlo"]["binom_residual"] < 1e-10
    assert code == (0 if summary["passed"] else 1)
    code2, text2 = run(tmp_path, *args, name="again")
    assert text2 == text


def test_density_stationary_gap(tmp_path):
    code, text = run(tmp_path, "density", "--measure", "stationary", "--kappa", "0.6")
    assert code == 0
    _, header, rows, summary = artifacts.read_csv(text)
    theta = np.array([float(r[0]) for r in rows])
    rho = np.array([float(r[1]) for r in rows])
    gap = np.abs(np.sin(theta / 2)) < 0.6
    assert np.all(rho[gap] == 0) and np.all(rho[~gap] > 0)
    assert summary["atom_at_one"] == 0.6


def test_density_nu_reports_atom(tmp_path):
    code, text = run(tmp_path, "density", "--measure", "nu", "--kappa", "0.6", "--t", "1", "--grid", "64")
    assert code == 0
    summary = artifacts.read_csv(text)[3]
    assert summary["atom_at_one"] == pytest.approx(0.6, abs=0.01)


def test_density_clark_large_time(tmp_path):
    code, text = run(tmp_path, "density", "--measure", "clark", "--kappa", "0.6", "--t", "20", "--grid", "64")
    rho = np.array([float(r[1]) for r in artifacts.read_csv(text)[2]])
    assert code == 0 and np.allclose(rho, 1, atol=1e-6)


def test_boundary_reports(tmp_path):
    code, text = run(tmp_path, "boundary", "--kappa", "0", "--t", "1")
    _, body = artifacts.read_json(text)
    assert code == 0
    assert body["z_right"] == pytest.approx(0.2137, abs=1e-3)
    assert body["d_2t"] is None
    _, body = artifacts.read_json(run(tmp_path, "boundary", "--kappa", "0.3", "--t", "4")[1])
    assert body["d_2t"] == pytest.approx(0.9575, abs=1e-3)
    _, body = artifacts.read_json(run(tmp_path, "boundary", "--kappa", "0.6", "--t", "1", "--n-points", "16")[1])
    assert body["boundary"]["min_distance_to_one"] > 0
    assert len(body["boundary"]["points"]) == 32
    assert body["monotonicity_violations"] == 0


def test_verify_quick_is_deterministic(tmp_path):
    code, text = run(tmp_path, "verify", "--level", "quick", "--seed", "7")
    assert code == 0
    _, body = artifacts.read_json(text)
    assert body["passed"] and all(c["passed"] for c in body["checks"])
    names = [c["name"] for c in body["checks"]]
    assert "reversion_gate_detects_mutation" in names
    assert run(tmp_path, "verify", "--level", "quick", "--seed", "7", name="again")[1] == text


def test_numerical_errors_exit_with_two(tmp_path, capsys):
    assert cli.main(["boundary", "--kappa", "0.3", "--t", "0", "--out", str(tmp_path / "x")]) == 2
    assert "DomainError" in capsys.readouterr().err
    assert cli.main(["moments", "--kappa", "1.5", "--t", "1", "--out", str(tmp_path / "y")]) == 2


def test_unknown_source_is_a_usage_error():
    with pytest.raises(SystemExit):
        cli.main(["moments", "--kappa", "0", "--t", "1", "--sources", "tarot"])


def test_json_output_is_sorted_and_parseable(tmp_path):
    _, text = run(tmp_path, "moments", "--kappa", "0.3", "--t", "1", "--format", "json")
    body = json.loads(text)
    assert body["manifest"]["schema_version"] == artifacts.SCHEMA_VERSION
    assert text.endswith("\n")
