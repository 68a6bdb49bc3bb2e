import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from roughflow.semigroup import (
    CellKernels,
    apply_fractional_power,
    apply_semigroup,
    beta_beta_norm_of_orbit,
    d_gamma_norm,
    dirichlet_laplacian,
    exp_divided_difference,
    explicit,
    from_preset,
    hat_cumsum,
    identity,
    verify_smoothing_bounds,
)
from roughflow.rough_path import Grid

lam = st.floats(0.0, 200.0)
times = st.floats(0.0, 3.0)


@settings(max_examples=50, deadline=None)
@given(l=lam, s=times, t=times)
def test_semigroup_law(l, s, t):
    sg = explicit([l, 0.5 * l])
    x = np.array([1.0, -2.0])
    lhs = apply_semigroup(sg, s + t, x)
    rhs = apply_semigroup(sg, s, apply_semigroup(sg, t, x))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-300)


def test_matches_matrix_exponential():
    sg = dirichlet_laplacian(5, 0.2)
    x = np.arange(1.0, 6.0)
    ref = scipy.linalg.expm(-0.3 * np.diag(sg.eigenvalues)) @ x
    assert np.allclose(apply_semigroup(sg, 0.3, x), ref, rtol=1e-13)


def test_identity_and_presets():
    assert np.all(identity(3).decay(5.0) == 1.0)
    sg = from_preset({"preset": "dirichlet_laplacian", "dim": 2, "scale": 1.0})
    assert np.allclose(sg.eigenvalues, [np.pi**2, 4 * np.pi**2])
    assert from_preset({"preset": "explicit", "eigenvalues": [2.0]}).dim_W == 1
    with pytest.raises(ValueError):
        from_preset({"preset": "heat"})


def test_negative_eigenvalues_rejected():
    with pytest.raises(ValueError):
        explicit([-1.0])


def test_fractional_power_and_norm():
    sg = explicit([4.0, 9.0])
    assert np.allclose(apply_fractional_power(sg, 0.5, [1.0, 1.0]), [2.0, 3.0])
    assert d_gamma_norm(sg, 0.0, [3.0, 4.0]) == pytest.approx(5.0)
    assert d_gamma_norm(sg, 0.5, [1.0, 0.0]) == pytest.approx(3.0)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(-40, 0), b=st.floats(-40, 0), c=st.floats(-40, 0))
def test_divided_difference_is_simplex_integral(a, b, c):
    # dd(a, b) = int_0^1 e^{a(1-r) + b r} dr ; dd(a, b, c) over the 2-simplex
    from scipy.integrate import quad, dblquad
    two = quad(lambda r: np.exp(a * (1 - r) + b * r), 0, 1, epsabs=1e-14)[0]
    assert float(exp_divided_difference(a, b)) == pytest.approx(two, rel=1e-9, abs=1e-14)
    three = dblquad(lambda q, r: np.exp(a * (1 - r) + b * (r - q) + c * q), 0, 1, 0, lambda r: r,
                    epsabs=1e-13)[0]
    assert float(exp_divided_difference(a, b, c)) == pytest.approx(three, rel=1e-7, abs=1e-13)


def test_cell_kernels_small_argument_limits():
    k = CellKernels.build(identity(2), 0.1)
    assert np.allclose(k.phi1, 1.0) and np.allclose(k.mixed, 1.0)
    assert np.allclose(k.iterated, 0.5) and np.allclose(k.ramp, 0.5)


def test_hat_cumsum_recursion(rng):
    cells = rng.standard_normal((20, 3))
    d = np.array([0.9, 0.5, 1.0])
    out = hat_cumsum(cells, d)
    ref = np.zeros((21, 3))
    for i in range(20):
        ref[i + 1] = d * ref[i] + cells[i]
    assert np.allclose(out, ref, atol=1e-14)


def test_smoothing_constants_bounded_uniformly_in_dimension():
    small = verify_smoothing_bounds(dirichlet_laplacian(4, 1.0))
    big = verify_smoothing_bounds(dirichlet_laplacian(64, 1.0))
    for key in ("smoothing", "near_identity", "two_time", "four_point"):
        assert np.isfinite(big[key])
        # the constants come from the scalar function x^a e^{-x}, not from the mode count
        assert big[key] <= 1.5 * small[key] + 1.0


def test_smoothing_rejects_bad_exponents():
    with pytest.raises(ValueError):
        verify_smoothing_bounds(identity(2), {"eta": 0.1, "kappa": 0.5})


def test_divided_difference_clustered_points():
    # exp[-9, -1e-12, 0] = ((1 - e^{-9}) / 9 - ...) computed with a 1e-12 perturbation of a double node
    exact = (1.0 - (1.0 - np.exp(-9.0)) / 9.0) / 9.0
    assert float(exp_divided_difference(-9.0, -1e-12, 0.0)) == pytest.approx(exact, rel=1e-11)


def test_orbit_norm_finite():
    sg = dirichlet_laplacian(4, 0.1)
    g = Grid.dyadic(0.0, 1.0, 6)
    v = beta_beta_norm_of_orbit(sg, np.ones(4), 0.3, g)
    assert np.isfinite(v) and v >= 2.0
