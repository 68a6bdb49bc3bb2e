import numpy as np
import pytest

from roughflow.coefficients import nemytskii_G, zero_G
from roughflow.rds import (
    cocycle_residual,
    driver_convergence_study,
    non_increasing,
    shift_compatibility,
    solution_map,
    subsample_lift,
    theta_flow_residual,
)
from roughflow.rough_path import Grid, QCovariance, VPath, assemble_qfbm, lift_piecewise_linear
from roughflow.semigroup import dirichlet_laplacian

KW = {"beta": 0.32}


@pytest.fixture
def world():
    g = Grid.dyadic(0.0, 1.0, 7)
    rp = lift_piecewise_linear(assemble_qfbm(QCovariance([1.0, 0.5]), 0.45, g, 1), 0.4)
    sg = dirichlet_laplacian(4, 0.1)
    rng = np.random.default_rng(2)
    G = nemytskii_G(sg, 0.32, rng.standard_normal((4, 4)) / 2, rng.standard_normal((4, 2)) / np.sqrt(2))
    return rp, sg, G, np.array([1.0, -0.5, 0.3, 0.2])


def test_solution_map_at_zero_is_identity(world):
    rp, sg, G, xi = world
    assert np.array_equal(solution_map(0.0, rp, sg, xi, G)[0], xi)


def test_cocycle_nonlinear(world):
    rp, sg, G, xi = world
    for t, tau in [(0.25, 0.25), (0.5, 0.125), (0.125, 0.75)]:
        assert cocycle_residual(1.0, rp, sg, xi, G, t, tau, **KW).residual <= 1e-10


def test_cocycle_tau_zero_and_linear_case(world):
    rp, sg, G, xi = world
    assert cocycle_residual(1.0, rp, sg, xi, G, 0.5, 0.0, **KW).residual <= 1e-12
    assert cocycle_residual(1.0, rp, sg, xi, zero_G(4, 2), 0.5, 0.25, **KW).residual <= 1e-12


def test_cocycle_rejects_bad_times(world):
    rp, sg, G, xi = world
    with pytest.raises(ValueError):
        cocycle_residual(1.0, rp, sg, xi, G, 0.75, 0.5, **KW)
    with pytest.raises(ValueError):
        cocycle_residual(1.0, rp, sg, xi, G, 0.3, 0.25, **KW)


def test_shift_compatibility(world):
    rp, sg, G, xi = world
    res = shift_compatibility(1.0, rp, sg, xi, G, 0.375, **KW)
    assert res["y"] <= 1e-8 and res["z"] <= 1e-8


def test_theta_flow(world):
    rp, sg, G, xi = world
    assert theta_flow_residual(rp, sg, xi, G, 0.25, 0.25, 0.125, **KW) <= 1e-8


def test_subsample_lift():
    g = Grid.dyadic(0.0, 1.0, 4)
    path = VPath(g, np.column_stack([g.times, g.times**2]))
    coarse = subsample_lift(path, 2, 0.4)
    assert coarse.grid.n_cells == 4
    assert np.array_equal(coarse.values, path.values[::4])
    with pytest.raises(ValueError):
        subsample_lift(path, 5, 0.4)


def test_non_increasing():
    assert non_increasing([3.0, 2.0, 2.1, 1.0])
    assert not non_increasing([1.0, 2.0])


def test_smooth_driver_already_resolved():
    # a driver that is linear on the coarse cells is reproduced exactly at every level
    g = Grid.dyadic(0.0, 1.0, 8)
    coarse = np.linspace(0.0, 1.0, 5)
    vals = np.column_stack([np.interp(g.times, coarse, [0, 1, 0, 1, 0]), np.interp(g.times, coarse, [0, 0, 1, 1, 2])])
    sg = dirichlet_laplacian(3, 0.1)
    G = zero_G(3, 2)
    rows = driver_convergence_study(VPath(g, vals), [2, 4, 6, 8], sg, np.ones(3), G, 0.4, **KW)
    assert all(r["metric"] <= 1e-12 and r["y_diff"] <= 1e-14 for r in rows)


def test_driver_convergence_needs_three_levels(world):
    rp, sg, G, xi = world
    with pytest.raises(ValueError):
        driver_convergence_study(rp.path, [5, 7], sg, xi, G, 0.4)
