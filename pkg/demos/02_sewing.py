"""
Sewing a germ with a semigroup twist
====================================

The germ ``Xi[v, u] = cos(t_u) (t_v - t_u)`` is summed along dyadic
partitions with weights ``exp(-lam (t - v))``.  The sums converge to
``int_0^1 exp(-lam (1 - r)) cos(r) dr`` at first order, which the level table
makes visible.
"""

import numpy as np
from scipy.integrate import quad

from roughflow.rough_path import Grid
from roughflow.semigroup import explicit
from roughflow.sewing import Germ, level_decay_ratio, max_level, sew, sew_adaptive

lam = 2.0
level = min(10, max_level())
grid = Grid.dyadic(0.0, 1.0, level)
t = grid.times


def batch(u, v):
    return (np.cos(t[u]) * (t[v] - t[u]))[:, None]


germ = Germ(lambda u, v: batch(np.array([u]), np.array([v]))[0], alpha_decl=1.0, rho_decl=2.0,
            grid=grid, batch=batch)
sg = explicit([lam])

res = sew(germ, sg, 0.0, 1.0, level)
exact = quad(lambda r: np.exp(-lam * (1 - r)) * np.cos(r), 0.0, 1.0)[0]
for row in res.levels:
    print(f"level {row['level']:2d}  intervals {row['n_intervals']:5d}  diff {row['diff_sup']:.3e}")
print(f"sewn value {res.value[0]:.8f}, exact {exact:.8f}")
print(f"fitted level ratio {level_decay_ratio(res):.3f} (first order gives 0.5)")

# stop as soon as the successive difference drops below 1e-2
auto = sew_adaptive(germ, sg, 0.0, 1.0, tol=1e-2)
print("adaptive level:", auto.level_used)
