import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from roughflow.rough_path import (
    Grid,
    GridRoughPath,
    OffGridError,
    QCovariance,
    VPath,
    assemble_qfbm,
    chen_defect,
    chen_reconstruct,
    fbm_covariance,
    holder_seminorm,
    lift_piecewise_linear,
    load_rough_path,
    path_norms,
    rough_metric,
    sample_fbm,
    sample_fbm_1d,
    save_rough_path,
    shift_rough_path,
    weighted_holder_norm,
)


class TestGrid:
    def test_dyadic(self):
        g = Grid.dyadic(0.0, 2.0, 3)
        assert g.n_cells == 8 and g.level == 3 and g.h == 0.25
        assert g.index(1.5) == 6
        assert g.times[-1] == 2.0

    def test_off_grid(self):
        with pytest.raises(OffGridError):
            Grid.dyadic(0.0, 1.0, 2).index(0.3)

    def test_non_dyadic_level(self):
        assert Grid(0.0, 1.0, 6).level is None

    def test_sub_and_refine(self):
        g = Grid.dyadic(0.0, 1.0, 4)
        s = g.sub(4, 12)
        assert s.t0 == 0.25 and s.t1 == 0.75 and s.n_cells == 8
        assert g.refine(2).n_cells == 32
        assert g.aligned_with(g.refine(4))


def test_path_shape_validated():
    g = Grid.dyadic(0.0, 1.0, 2)
    with pytest.raises(ValueError):
        VPath(g, np.zeros((4, 2)))


def test_area_matches_direct_sum(small_rp):
    vals = small_rp.values
    for i, j in [(0, 32), (3, 17), (8, 9), (5, 5)]:
        assert np.allclose(small_rp.area(i, j), oracles.area_direct(vals, i, j), atol=1e-14)


def test_chen_reconstruction_orders_agree(small_rp):
    g = small_rp.grid
    for i, j in [(0, 32), (2, 29)]:
        left = chen_reconstruct(small_rp, g.time(i), g.time(j), "left")
        right = chen_reconstruct(small_rp, g.time(i), g.time(j), "right")
        assert np.allclose(left, right, atol=1e-14)
        assert np.allclose(left, small_rp.area(i, j), atol=1e-14)


def test_linear_path_has_no_levy_area():
    g = Grid.dyadic(0.0, 1.0, 4)
    vals = np.outer(g.times, [1.0, -2.0])
    rp = lift_piecewise_linear(VPath(g, vals))
    a = rp.area(0, 16)
    assert np.allclose(a - a.T, 0.0, atol=1e-15)


def test_smooth_path_area_converges():
    # w = (cos t, sin t) on [0, 1]: Levy area of the arc is (t - sin t) / 2 per unit circle sweep
    exact = 0.5 * (1.0 - np.sin(1.0))
    errs = []
    for lv in (4, 6, 8):
        g = Grid.dyadic(0.0, 1.0, lv)
        rp = lift_piecewise_linear(VPath(g, np.column_stack([np.cos(g.times), np.sin(g.times)])))
        a = rp.area(0, g.n_cells)
        errs.append(abs(0.5 * (a[0, 1] - a[1, 0]) - exact))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), H=st.sampled_from([0.35, 0.45, 0.5]))
def test_chen_and_symmetry_property(seed, H):
    g = Grid.dyadic(0.0, 1.0, 5)
    rp = lift_piecewise_linear(assemble_qfbm(QCovariance([1.0, 0.3, 0.1]), H, g, seed), H - 0.05)
    idx = np.arange(g.n_nodes)
    i, u, j = np.meshgrid(idx, idx, idx, indexing="ij")
    ok = (i <= u) & (u <= j)
    assert chen_defect(rp, i[ok], u[ok], j[ok]).max() <= 1e-12
    a = rp.area(i[ok], j[ok])
    d = rp.increment(i[ok], j[ok])
    sym = 0.5 * (a + np.swapaxes(a, -1, -2)) - 0.5 * d[:, :, None] * d[:, None, :]
    assert np.abs(sym).max() <= 1e-12


def test_fbm_sampler_deterministic_and_anchored():
    g = Grid.dyadic(0.0, 1.0, 6)
    a = sample_fbm_1d(0.4, g, 11)
    assert a[0] == 0.0
    assert np.array_equal(a, sample_fbm_1d(0.4, g, 11))
    assert not np.array_equal(a, sample_fbm_1d(0.4, g, 12))


def test_fbm_sampler_rejects_bad_hurst():
    with pytest.raises(ValueError):
        sample_fbm(0.3, Grid.dyadic(0.0, 1.0, 3), 0)


def test_fbm_half_is_brownian_variance():
    g = Grid.dyadic(0.0, 1.0, 4)
    paths = sample_fbm(0.5, g, 1, size=20000)
    var = paths.var(axis=0)
    assert np.allclose(var, g.times, atol=0.05)


def test_fbm_covariance_formula():
    assert fbm_covariance(0.5, 0.3, 0.7) == pytest.approx(0.3)
    assert fbm_covariance(0.4, 1.0, 1.0) == pytest.approx(1.0)
    assert np.allclose(fbm_covariance(0.4, 0.2, 0.9), oracles.fbm_cov(0.4, 0.2, 0.9))


def test_qfbm_scaling():
    g = Grid.dyadic(0.0, 1.0, 3)
    q = QCovariance([4.0, 1.0])
    p = assemble_qfbm(q, 0.45, g, 5)
    raw = sample_fbm(0.45, g, 5, size=2)
    assert np.allclose(p.values[:, 0], 2.0 * raw[0])
    assert np.allclose(p.values[:, 1], raw[1])


def test_holder_seminorm_of_linear_path():
    g = Grid.dyadic(0.0, 1.0, 5)
    v = 3.0 * g.times[:, None]
    assert holder_seminorm(v, g, 1.0) == pytest.approx(3.0)
    # for exponent < 1 the worst pair is the longest one
    assert holder_seminorm(v, g, 0.5) == pytest.approx(3.0)


def test_weighted_norm_of_constant():
    g = Grid.dyadic(0.0, 1.0, 3)
    assert weighted_holder_norm(np.ones((9, 2)), g, 0.3) == pytest.approx(np.sqrt(2))


def test_holder_seminorm_rejects_bad_exponent():
    g = Grid.dyadic(0.0, 1.0, 2)
    with pytest.raises(ValueError):
        holder_seminorm(np.zeros((5, 1)), g, 1.5)


def test_path_norms_positive(small_rp):
    w, a = path_norms(small_rp)
    assert w > 0 and a > 0


def test_rough_metric_zero_on_refinement(small_rp):
    fine = small_rp.refine(4)
    assert rough_metric(small_rp, fine) <= 1e-12
    assert rough_metric(small_rp, small_rp) == 0.0


def test_refine_preserves_areas(small_rp):
    fine = small_rp.refine(2)
    assert np.allclose(fine.area(0, 64), small_rp.area(0, 32), atol=1e-14)
    assert np.allclose(fine.area(10, 30), small_rp.area(5, 15), atol=1e-14)


def test_shift_rebases(small_rp):
    sh = shift_rough_path(small_rp, 0.25, 0.75)
    assert sh.grid.t0 == 0.0 and sh.grid.n_cells == 16
    assert np.allclose(sh.values[0], 0.0)
    assert np.allclose(sh.area(0, 16), small_rp.area(8, 24), atol=1e-14)


def test_save_load_roundtrip(tmp_path, small_rp):
    p = tmp_path / "w.txt"
    save_rough_path(small_rp, p)
    back = load_rough_path(p)
    assert back.grid == small_rp.grid and back.alpha == small_rp.alpha
    assert np.array_equal(back.values, small_rp.values)
    assert np.array_equal(back.area_adjacent, small_rp.area_adjacent)


def test_load_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("hello\n")
    with pytest.raises(ValueError):
        load_rough_path(p)


def test_rough_path_rejects_bad_area():
    g = Grid.dyadic(0.0, 1.0, 2)
    with pytest.raises(ValueError):
        GridRoughPath(VPath(g, np.zeros((5, 2))), np.zeros((3, 2, 2)), 0.4)
