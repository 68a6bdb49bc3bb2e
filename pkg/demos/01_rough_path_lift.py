"""
Lifting a sampled Q-fBm to a rough path
=======================================

A two-component fractional Brownian motion is sampled on a dyadic grid and
lifted with the exact iterated integrals of its linear interpolation.  We
check Chen's relation, look at the Levy area and estimate Hoelder norms at
a few resolutions.
"""

import numpy as np

from roughflow.rough_path import (
    Grid,
    QCovariance,
    assemble_qfbm,
    chen_defect,
    lift_piecewise_linear,
    path_norms,
    rough_metric,
)
from roughflow.sewing import max_level

H = 0.45
level = min(10, max_level())
grid = Grid.dyadic(0.0, 1.0, level)

# trace-class covariance with eigenvalues 1 and 1/2
w = assemble_qfbm(QCovariance([1.0, 0.5]), H, grid, seed=0)
rp = lift_piecewise_linear(w, alpha=H - 0.05)
print(f"{grid.n_cells} cells, w_1 = {rp.increment(0, grid.n_cells)}")

###############################################################################
# Chen's relation on random node triples

rng = np.random.default_rng(1)
tri = np.sort(rng.integers(0, grid.n_nodes, size=(5000, 3)), axis=1)
print("max Chen defect:", chen_defect(rp, tri[:, 0], tri[:, 1], tri[:, 2]).max())

###############################################################################
# The antisymmetric part of the area is the Levy area; the symmetric part is
# fixed by the increment.

A = rp.area(0, grid.n_cells)
d = rp.increment(0, grid.n_cells)
print("Levy area over [0, 1]:", 0.5 * (A[0, 1] - A[1, 0]))
print("symmetric residual:", np.abs(0.5 * (A + A.T) - 0.5 * np.outer(d, d)).max())

###############################################################################
# Hoelder norms and the distance of coarser lifts to the finest one

for lv in range(max(2, level - 4), level):
    step = 2 ** (level - lv)
    coarse = lift_piecewise_linear(type(w)(Grid.dyadic(0.0, 1.0, lv), w.values[::step]), rp.alpha)
    wn, an = path_norms(coarse)
    print(f"level {lv}: |||w||| = {wn:.3f}  ||w2|| = {an:.3f}  d(lift, finest) = {rough_metric(coarse, rp):.3f}")
