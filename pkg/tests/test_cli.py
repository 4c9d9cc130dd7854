"""CLI subcommands, exit codes, and output files."""

import json
import math

import numpy as np
import pytest

from ksfluid.cli import main
from ksfluid.quadrature import read_gridfunction

pytestmark = pytest.mark.filterwarnings("ignore:potential is finite at contact")


def _desk_config(out_dir, **overrides):
    cfg = {
        "potential": {"kind": "hard-sphere", "params": {"a": 1.0}},
        "envelope": {
            "s": 1.0,
            "lower": {"form": "inverse-power", "amplitude": 1.0, "exponent": 4.0},
            "upper": {"form": "exponential", "amplitude": 1.0, "rate": 1.0},
        },
        "thermo": {"beta": 1.0, "z_factor": 0.5},
        "stability_B": 0.0,
        "t0": 0.5,
        "grid": {"L": 2.0, "n_g": 3},
        "ks": {"m_max": 3, "n_max": 4, "neumann_tol": 1e-12, "max_iters": 300},
        "oracle": {"N_max": 6},
        "perturbation": {"kind": "exp-tail",
                         "params": {"amplitude": 0.125, "rate": 1.0, "r_min": 1.0}},
        "outputs": {"dir": str(out_dir), "formats": ["csv", "json"]},
    }
    cfg.update(overrides)
    return cfg


def _write(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=1))
    return str(path)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def test_check_passes_on_desk_case(tmp_path, capsys):
    cfg = _write(tmp_path, _desk_config(tmp_path / "out"))
    assert main(["check", "--config", cfg]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["admissible"] is True
    assert payload["z_gate_ok"] is True
    assert payload["z_max"] == pytest.approx(3.0 / (4.0 * math.pi * math.e), rel=1e-9)
    assert payload["stability_sample"]["certifying"] is False


def test_check_fails_on_hot_activity(tmp_path, capsys):
    raw = _desk_config(tmp_path / "out")
    raw["thermo"] = {"beta": 1.0, "z_factor": 2.0}
    cfg = _write(tmp_path, raw)
    assert main(["check", "--config", cfg]) == 1


def test_malformed_json_exits_two(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["check", "--config", str(bad)]) == 2


def test_schema_violations_exit_two(tmp_path):
    raw = _desk_config(tmp_path / "out")
    del raw["thermo"]
    assert main(["check", "--config", _write(tmp_path, raw, "a.json")]) == 2
    raw = _desk_config(tmp_path / "out")
    raw["thermo"] = {"beta": 1.0, "z": 0.01, "z_factor": 0.5}
    assert main(["check", "--config", _write(tmp_path, raw, "b.json")]) == 2
    raw = _desk_config(tmp_path / "out")
    raw["oracle"] = {"N_max": 1}
    assert main(["check", "--config", _write(tmp_path, raw, "c.json")]) == 2


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def test_solve_free_case_writes_activity_powers(tmp_path):
    out = tmp_path / "out"
    raw = _desk_config(out)
    raw["potential"] = {"kind": "zero"}
    raw["thermo"] = {"beta": 1.0, "z": 0.1}
    cfg = _write(tmp_path, raw)
    assert main(["solve", "--config", cfg, "--override-admissibility"]) == 0
    for m in (1, 2, 3):
        gf = read_gridfunction(str(out / f"rho_{m}"))
        assert np.max(np.abs(gf.values - 0.1 ** m)) < 1e-12
    report = json.loads((out / "solve_report.json").read_text())
    assert report["residuals"][-1] <= 1e-12


def test_solve_without_override_refuses_free_case(tmp_path):
    raw = _desk_config(tmp_path / "out")
    raw["potential"] = {"kind": "zero"}
    raw["thermo"] = {"beta": 1.0, "z": 0.1}
    assert main(["solve", "--config", _write(tmp_path, raw)]) == 1


def test_solve_creates_missing_output_dir(tmp_path):
    out = tmp_path / "deep" / "nested" / "dir"
    cfg = _write(tmp_path, _desk_config(out))
    assert main(["solve", "--config", cfg]) == 0
    assert (out / "rho_1.csv").exists()
    assert (out / "manifest.json").exists()


def test_solve_manifest_reruns_byte_identical(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    cfg = _write(tmp_path, _desk_config(out_a))
    assert main(["solve", "--config", cfg]) == 0
    assert main(["solve", "--config", cfg, "--out", str(out_b)]) == 0
    for name in ("manifest.json", "solve_report.json", "rho_1.csv", "rho_3.bin"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


# ---------------------------------------------------------------------------
# oracle and the cross-check
# ---------------------------------------------------------------------------

def test_oracle_compares_with_solver_outputs(tmp_path):
    out = tmp_path / "out"
    cfg = _write(tmp_path, _desk_config(out))
    assert main(["solve", "--config", cfg]) == 0
    assert main(["oracle", "--config", cfg]) == 0
    payload = json.loads((out / "oracle_report.json").read_text())
    assert payload["comparison"]["pass"] is True
    assert (out / "oracle_deriv_rho_1.csv").exists()
    assert (out / "oracle_deriv_rho_2.csv").exists()
    assert payload["xi"] > 1.0


def test_oracle_free_case_partition_value(tmp_path, capsys):
    out = tmp_path / "out"
    raw = _desk_config(out)
    raw["potential"] = {"kind": "zero"}
    raw["thermo"] = {"beta": 1.0, "z": 0.1}
    raw.pop("perturbation")
    cfg = _write(tmp_path, raw)
    assert main(["oracle", "--config", cfg, "--override-admissibility"]) == 0
    payload = json.loads((out / "oracle_report.json").read_text())
    y = 0.1 * 8.0
    expected = sum(y ** n / math.gamma(n + 1) for n in range(7))
    assert payload["xi"] == pytest.approx(expected, rel=1e-12)
    assert abs(math.exp(y) - payload["xi"]) <= payload["tails"]["xi"] * (1 + 1e-9)


# ---------------------------------------------------------------------------
# derivative
# ---------------------------------------------------------------------------

def test_derivative_run_records_slope(tmp_path):
    out = tmp_path / "out"
    raw = _desk_config(out)
    raw["ks"]["neumann_tol"] = 1e-13
    cfg = _write(tmp_path, raw)
    assert main(["derivative", "--config", cfg]) == 0
    payload = json.loads((out / "derivative_report.json").read_text())
    assert 1.8 <= payload["fd_slope"] <= 2.2
    assert payload["explicit_vs_implicit"]["order_1_sup_diff"] < 1e-6
    assert payload["explicit_vs_implicit"]["order_2_sup_diff"] < 1e-6
    assert (out / "fd_table.csv").exists()
    assert (out / "dr_1.csv").exists()


def test_derivative_zero_direction_writes_zero_grids(tmp_path):
    out = tmp_path / "out"
    raw = _desk_config(out)
    raw["perturbation"] = {"kind": "zero"}
    cfg = _write(tmp_path, raw)
    assert main(["derivative", "--config", cfg]) == 0
    gf = read_gridfunction(str(out / "dr_1"))
    assert np.max(np.abs(gf.values)) < 1e-12


def test_derivative_gate_refuses_large_direction(tmp_path):
    raw = _desk_config(tmp_path / "out")
    raw["perturbation"]["params"]["amplitude"] = 0.9
    cfg = _write(tmp_path, raw)
    assert main(["derivative", "--config", cfg]) == 1


def test_derivative_requires_perturbation(tmp_path):
    raw = _desk_config(tmp_path / "out")
    raw.pop("perturbation")
    assert main(["derivative", "--config", _write(tmp_path, raw)]) == 2


# ---------------------------------------------------------------------------
# limit sweep
# ---------------------------------------------------------------------------

def test_limit_sweep_single_side_zero_rows(tmp_path):
    out = tmp_path / "out"
    raw = _desk_config(out)
    raw["ks"] = {"m_max": 2, "n_max": 2, "neumann_tol": 1e-10, "max_iters": 300}
    raw["sweep"] = {"inner_L": 1.0, "inner_ng": 2, "outer_sides": [2.0]}
    cfg = _write(tmp_path, raw)
    assert main(["limit-sweep", "--config", cfg]) == 0
    rows = (out / "sweep.csv").read_text().strip().splitlines()
    assert rows[0] == "L,rho_diff_m1,rho_diff_m2,dr_diff_m1,dr_diff_m2"
    assert [float(x) for x in rows[1].split(",")[1:]] == [0.0, 0.0, 0.0, 0.0]


def test_limit_sweep_incompatible_lattice_exits_one(tmp_path):
    raw = _desk_config(tmp_path / "out")
    raw["ks"] = {"m_max": 2, "n_max": 2}
    raw["sweep"] = {"inner_L": 1.0, "inner_ng": 3, "outer_sides": [2.0]}
    assert main(["limit-sweep", "--config", _write(tmp_path, raw)]) == 1


def test_limit_sweep_requires_sweep_section(tmp_path):
    raw = _desk_config(tmp_path / "out")
    assert main(["limit-sweep", "--config", _write(tmp_path, raw)]) == 2
