import re

import numpy as np
import pytest
import yaml

from roughflow.io import read_report, read_table, read_trajectory, write_report, write_table, write_trajectory
from roughflow.scenario import Scenario, ScenarioError, load_scenario, standard_scenario


def test_defaults_follow_hurst():
    sc = Scenario(hurst=0.45)
    assert sc.alpha == pytest.approx(0.40) and sc.alpha_prime == pytest.approx(0.43)
    assert sc.alpha + 2 * sc.beta > 1


@pytest.mark.parametrize("bad,needle", [
    ({"alpha": 0.46}, "alpha < H"),
    ({"hurst": 0.6}, "H <= 1/2"),
    ({"alpha": 0.30}, "1/3 < alpha"),
    ({"beta": 0.25}, "alpha + 2 beta > 1"),
    ({"T": 0.0}, "T > 0"),
    ({"q_eigenvalues": []}, "dim_V"),
    ({"xi": [1.0]}, "len(xi) = dim_W"),
    ({"driver": "levy"}, "driver"),
    ({"G": {"family": "cubic"}}, "G family"),
    ({"colour": "red"}, "unknown config keys"),
])
def test_invalid_configs_name_the_invariant(bad, needle):
    with pytest.raises(ScenarioError, match=re.escape(needle)):
        Scenario.from_mapping(bad)


def test_yaml_roundtrip(tmp_path):
    sc = standard_scenario(level=6)
    p = tmp_path / "s.yaml"
    p.write_text(yaml.safe_dump(sc.to_mapping()))
    back = load_scenario(p)
    assert back.to_mapping() == sc.to_mapping()


def test_yaml_errors(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("[1, 2")
    with pytest.raises(ScenarioError):
        load_scenario(p)
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ScenarioError, match="mapping"):
        load_scenario(p)


def test_level_cap(monkeypatch):
    monkeypatch.setenv("ROUGHFLOW_MAX_LEVEL", "5")
    sc = standard_scenario()
    assert sc.working_level == 5 and sc.grid().n_cells == 32


def test_drivers():
    sc = standard_scenario(level=4)
    w = sc.driver_path(seed=3)
    assert w.values.shape == (17, 2)
    smooth = standard_scenario(level=4, driver="smooth").driver_path()
    assert np.allclose(smooth.values[:, 0], np.sin(smooth.grid.times))


def test_trajectory_roundtrip(tmp_path, rng):
    t = np.linspace(0, 1, 9)
    y = rng.standard_normal((9, 3))
    write_trajectory(tmp_path / "tr.csv", t, y)
    assert (tmp_path / "tr.csv").read_text().splitlines()[0] == "t,y_1,y_2,y_3"
    t2, y2 = read_trajectory(tmp_path / "tr.csv")
    assert np.array_equal(t, t2) and np.array_equal(y, y2)


def test_table_roundtrip(tmp_path):
    rows = [{"check": "a", "value": 0.1 + 0.2, "n": 3, "passed": True},
            {"check": "b", "value": float("inf"), "n": -1, "passed": False}]
    write_table(tmp_path / "t.csv", rows)
    assert read_table(tmp_path / "t.csv") == rows


def test_report_roundtrip(tmp_path):
    rep = {"x": np.float64(1.5), "arr": np.arange(3), "nan": float("nan"), "flag": np.bool_(True)}
    write_report(tmp_path / "r.json", rep)
    assert read_report(tmp_path / "r.json") == {"x": 1.5, "arr": [0, 1, 2], "nan": None, "flag": True}
