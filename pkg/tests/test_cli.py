import subprocess
import sys

import numpy as np
import pytest
import yaml

from roughflow.cli import main
from roughflow.io import read_report, read_table, read_trajectory
from roughflow.scenario import standard_scenario


def write_config(path, **overrides):
    data = standard_scenario(**overrides).to_mapping()
    path.write_text(yaml.safe_dump(data))
    return path


@pytest.fixture
def cfg(tmp_path):
    return write_config(tmp_path / "std.yaml", level=7, seeds=[0, 1])


def test_solve_outputs_roundtrip_and_are_deterministic(tmp_path, cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", str(cfg), "--out", str(a), "--command", "solve"]) == 0
    assert main(["--config", str(cfg), "--out", str(b), "--command", "solve"]) == 0
    for name in ("trajectory.csv", "report.json", "plot_trajectory.py"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    t, y = read_trajectory(a / "trajectory.csv")
    assert t.shape == (129,) and y.shape == (129, 4)
    rep = read_report(a / "report.json")["solve"]
    assert rep["solve"]["fixed_point_residual"] <= 2e-11
    assert rep["RY_is_zero"] is False
    compile((a / "plot_trajectory.py").read_text(), "plot_trajectory.py", "exec")


def test_zero_coefficient_solve_is_orbit(tmp_path):
    cfg = write_config(tmp_path / "z.yaml", level=6, G={"family": "zero"})
    assert main(["--config", str(cfg), "--out", str(tmp_path), "--command", "solve"]) == 0
    t, y = read_trajectory(tmp_path / "trajectory.csv")
    sc = standard_scenario()
    orbit = np.asarray(sc.xi) * sc.semigroup_op().decay(t)
    assert np.allclose(y, orbit, atol=1e-15)
    assert read_report(tmp_path / "report.json")["solve"]["RY_is_zero"] is True


def test_verify_passes_on_standard_scenario(tmp_path, cfg):
    assert main(["--config", str(cfg), "--out", str(tmp_path), "--command", "verify"]) == 0
    rows = read_table(tmp_path / "verify.csv")
    names = {r["check"] for r in rows}
    assert {"chen_defect", "algebraic_b", "sewing_level_ratio", "shift_property",
            "fixed_point_residual", "constraint_residual"} <= names
    assert all(r["passed"] for r in rows)


def test_converge_and_cocycle(tmp_path, cfg):
    assert main(["--config", str(cfg), "--out", str(tmp_path), "--command", "converge"]) == 0
    rows = read_table(tmp_path / "converge.csv")
    assert [r["level"] for r in rows] == [5, 6]
    assert main(["--config", str(cfg), "--out", str(tmp_path), "--command", "cocycle"]) == 0
    probes = read_table(tmp_path / "cocycle.csv")
    assert len(probes) == 2 * 9 and all(p["residual"] <= 1e-6 for p in probes)
    assert len(read_report(tmp_path / "report.json")["cocycle"]) == 18


def test_overrides(tmp_path, cfg):
    assert main(["--config", str(cfg), "--out", str(tmp_path), "--command", "solve",
                 "--seed", "5", "--level", "5"]) == 0
    t, _ = read_trajectory(tmp_path / "trajectory.csv")
    assert t.size == 33
    assert read_report(tmp_path / "report.json")["solve"]["scenario"]["seed"] == 5


def test_level_cap_env(tmp_path, cfg, monkeypatch):
    monkeypatch.setenv("ROUGHFLOW_MAX_LEVEL", "4")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "--command", "solve"]) == 0
    t, _ = read_trajectory(tmp_path / "trajectory.csv")
    assert t.size == 17


def test_invalid_config_exits_nonzero(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("hurst: 0.45\nalpha: 0.47\n")
    assert main(["--config", str(p), "--out", str(tmp_path), "--command", "solve"]) == 2
    assert "alpha < H" in capsys.readouterr().err


def test_missing_config(tmp_path):
    assert main(["--config", str(tmp_path / "nope.yaml"), "--out", str(tmp_path), "--command", "solve"]) == 2


def test_numerical_failure_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path / "f.yaml", level=5, G={"family": "nemytskii", "seed": 2, "scale": 50.0},
                       tolerances={"max_iter": 2})
    assert main(["--config", str(cfg), "--out", str(tmp_path), "--command", "solve"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_module_entry_point(tmp_path, cfg):
    out = subprocess.run([sys.executable, "-m", "roughflow", "--config", str(cfg), "--out", str(tmp_path),
                          "--command", "solve", "--level", "4"], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "trajectory.csv").exists()
