"""Cocycle checks and driver-approximation studies for the solution map.

The solution map ``phi(t, w, xi)`` is evaluated with :func:`solve_global` on
sampled drivers; the Wiener shift is :func:`shift_rough_path`.  Shifts are
restricted to grid nodes so both sides of every identity use the same driver
data.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .coefficients import CoefficientF, CoefficientG
from .rough_path import (
    Grid,
    GridRoughPath,
    VPath,
    chen_defect,
    lift_piecewise_linear,
    rough_metric,
    shift_rough_path,
)
from .semigroup import SpectralSemigroup
from .solver import solve_global

__all__ = [
    "CocycleProbe",
    "solution_map",
    "cocycle_residual",
    "shift_compatibility",
    "theta_flow_residual",
    "subsample_lift",
    "driver_convergence_study",
    "non_increasing",
]


@dataclass
class CocycleProbe:
    t: float
    tau: float
    xi: list
    seed: int | None
    residual: float

    def to_dict(self) -> dict:
        return asdict(self)


def solution_map(t: float, rp: GridRoughPath, sg: SpectralSemigroup, xi, G: CoefficientG,
                 F: CoefficientF | None = None, **kw) -> np.ndarray:
    """Trajectory of ``phi(., w, xi)`` on the nodes of ``[0, t]``; ``xi`` itself when ``t = 0``."""
    if t == 0:
        return np.asarray(xi, dtype=float)[None, :]
    pair, _ = solve_global(t, rp, sg, xi, G, F, **kw)
    return pair.y


def _check_nodes(rp: GridRoughPath, *times: float) -> None:
    for s in times:
        rp.grid.index(rp.grid.t0 + s)


def cocycle_residual(T: float, rp: GridRoughPath, sg: SpectralSemigroup, xi, G: CoefficientG,
                     t: float, tau: float, F: CoefficientF | None = None, seed: int | None = None,
                     **kw) -> CocycleProbe:
    """``sup |phi(tau + r, w, xi) - phi(r, theta_tau w, phi(tau, w, xi))|`` over ``r in [0, t]``.

    The left side comes from one solve on ``[0, t + tau]``; the right side
    from a solve on ``[0, tau]`` followed by a solve on the shifted driver.
    """
    if t <= 0 or tau < 0 or t + tau > T + 1e-12:
        raise ValueError("need t > 0, tau >= 0 and t + tau <= T")
    _check_nodes(rp, t, tau, t + tau)
    g = rp.grid
    k = g.index(g.t0 + tau)
    full = solution_map(t + tau, rp, sg, xi, G, F, **kw)
    y_tau = solution_map(tau, rp, sg, xi, G, F, **kw)[-1]
    shifted = shift_rough_path(rp, tau, g.t0 + t + tau)
    second = solution_map(t, shifted, sg, y_tau, G, F, **kw)
    res = float(np.abs(full[k:] - second).max())
    return CocycleProbe(float(t), float(tau), [float(v) for v in np.ravel(xi)], seed, res)


def shift_compatibility(T: float, rp: GridRoughPath, sg: SpectralSemigroup, xi, G: CoefficientG,
                        tau: float, F: CoefficientF | None = None, n_E: int = 8, seed: int = 0,
                        **kw) -> dict:
    """Compare the solve on ``theta_tau w`` from ``y_tau`` with the restriction of the full solve.

    Returns the sup differences of ``y`` and of ``z`` (over random unit ``E``
    and random node pairs).
    """
    _check_nodes(rp, tau, T)
    g = rp.grid
    k = g.index(g.t0 + tau)
    n = g.index(g.t0 + T)
    pair, _ = solve_global(T, rp, sg, xi, G, F, **kw)
    restricted = pair.restrict(k, n)
    shifted = shift_rough_path(rp, tau, g.t0 + T)
    other, _ = solve_global(T - tau, shifted, sg, pair.y[k], G, F, **kw)
    rng = np.random.default_rng(seed)
    zres = 0.0
    for _ in range(n_E):
        E = rng.standard_normal(pair.qcum.shape[1:])
        i, j = np.sort(rng.integers(0, n - k + 1, size=2))
        zres = max(zres, float(np.abs(restricted.z(i, j, E) - other.z(i, j, E)).max()))
    return {"y": float(np.abs(restricted.y - other.y).max()), "z": zres}


def theta_flow_residual(rp: GridRoughPath, sg: SpectralSemigroup, xi, G: CoefficientG, t: float,
                        tau1: float, tau2: float, F: CoefficientF | None = None, **kw) -> float:
    """Difference between evolving through ``tau1`` then ``tau2`` and through ``tau1 + tau2`` at once."""
    g = rp.grid
    _check_nodes(rp, tau1, tau1 + tau2, tau1 + tau2 + t)
    y1 = solution_map(tau1, rp, sg, xi, G, F, **kw)[-1]
    w1 = shift_rough_path(rp, tau1)
    y12 = solution_map(tau2, w1, sg, y1, G, F, **kw)[-1]
    w12 = shift_rough_path(w1, tau2, tau2 + t)
    a = solution_map(t, w12, sg, y12, G, F, **kw)
    y_direct = solution_map(tau1 + tau2, rp, sg, xi, G, F, **kw)[-1]
    wd = shift_rough_path(rp, tau1 + tau2, g.t0 + tau1 + tau2 + t)
    b = solution_map(t, wd, sg, y_direct, G, F, **kw)
    return float(np.abs(a - b).max())


def subsample_lift(path: VPath, level: int, alpha: float) -> GridRoughPath:
    """Piecewise-linear lift of the path sampled on the level-``level`` dyadic sub-grid."""
    g = path.grid
    step, rem = divmod(g.n_cells, 2**level)
    if rem or step < 1:
        raise ValueError(f"level {level} is not a dyadic sub-grid of {g.n_cells} cells")
    coarse = Grid(g.t0, g.t1, 2**level)
    return lift_piecewise_linear(VPath(coarse, path.values[::step]), alpha)


def non_increasing(values, slack: float = 0.10) -> bool:
    """True if every entry is at most ``(1 + slack)`` times its predecessor."""
    v = np.asarray(values, dtype=float)
    return bool(np.all(v[1:] <= (1.0 + slack) * v[:-1] + 1e-300))


def driver_convergence_study(path: VPath, levels, sg: SpectralSemigroup, xi, G: CoefficientG,
                             alpha: float, T: float | None = None,
                             F: CoefficientF | None = None, **kw) -> list[dict]:
    """Self-convergence of lifts and solutions across dyadic levels of one realisation.

    ``path`` is sampled on the finest grid.  For each level below the finest
    the row holds the rough-path distance to the finest lift, the sup
    difference of the solutions at the coarse nodes, and the Chen defect of
    the coarse lift on a sample of node triples.
    """
    levels = sorted(int(v) for v in levels)
    if len(levels) < 3:
        raise ValueError("need at least three levels")
    top = levels[-1]
    T = path.grid.length if T is None else T
    fine = subsample_lift(path, top, alpha)
    y_fine = solution_map(T, fine, sg, xi, G, F, **kw)
    rng = np.random.default_rng(0)
    rows = []
    for lv in levels[:-1]:
        rp = subsample_lift(path, lv, alpha)
        y = solution_map(T, rp, sg, xi, G, F, **kw)
        step = 2 ** (top - lv)
        tri = np.sort(rng.integers(0, rp.grid.n_nodes, size=(256, 3)), axis=1)
        rows.append({
            "level": lv,
            "metric": rough_metric(rp, fine, alpha),
            "y_diff": float(np.abs(y - y_fine[::step]).max()),
            "chen_defect": float(chen_defect(rp, tri[:, 0], tri[:, 1], tri[:, 2]).max()),
        })
    return rows
