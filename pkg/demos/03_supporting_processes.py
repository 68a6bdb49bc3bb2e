"""
Convolved driver processes
==========================

For a fixed rough path the processes ``omega_S``, ``a``, ``b`` and ``c`` are
computed in closed form cell by cell.  Their twisted additivity defects
vanish to rounding, and for ``S = Id`` they collapse to the plain increment
and area.
"""

import numpy as np

from roughflow.convolution import a_process, algebraic_defects, b_process, c_process, omega_S
from roughflow.scenario import standard_scenario
from roughflow.semigroup import identity

sc = standard_scenario(level=8)
rp = sc.rough_path()
sg = sc.semigroup_op()
rng = np.random.default_rng(0)
E = rng.standard_normal((4, 4, 2))
K = rng.standard_normal((4, 2))
x = rng.standard_normal(4)

print("omega_S[1, 0](K) =", omega_S(rp, sg, K, 0.0, 1.0))
print("a[1, 0](E, x)    =", a_process(rp, sg, E, x, 0.0, 1.0))
print("b[1, 0](E, K)    =", b_process(rp, sg, E, K, 0.0, 1.0))
print("c[1, 0](E, K)    =", c_process(rp, sg, E, K, 0.0, 1.0))

print("\ntwisted additivity at (s, tau, t) = (0.25, 0.5, 1):")
for name, val in algebraic_defects(rp, sg, E, K, x, 0.25, 0.5, 1.0).items():
    print(f"  {name:8s} {val:.2e}")

###############################################################################
# The sewn version of ``b`` converges to the closed form as the partition
# is refined.

exact = b_process(rp, sg, E, K, 0.0, 1.0)
for lv in (4, 6, 8):
    err = np.abs(b_process(rp, sg, E, K, 0.0, 1.0, level=lv) - exact).max()
    print(f"sewn b at level {lv}: error {err:.2e}")

###############################################################################
# Degenerate semigroup

idt = identity(4)
area = rp.area(0, rp.grid.n_cells)
print("\nS = Id:  |c - E K w2| =",
      np.abs(c_process(rp, idt, E, K, 0.0, 1.0) - np.einsum("klj,la,aj->k", E, K, area)).max())
