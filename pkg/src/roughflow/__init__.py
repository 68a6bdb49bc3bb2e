"""Numerical rough-path solver for parabolic evolution equations driven by fractional noise.

Submodules
----------
rough_path
    Dyadic grids, fBm sampling, piecewise-linear lifts, Chen checks and Hoelder norms.
semigroup
    Diagonal analytic semigroups, fractional powers and exact cell kernels.
sewing
    Semigroup-twisted sewing of two-parameter germs.
convolution
    The convolved driver processes ``omega_S``, ``a``, ``b`` and ``c``.
solver
    Controlled pairs, the Picard map and the segmented global solve.
rds
    Wiener shift, cocycle residuals and driver-convergence studies.
cli
    YAML scenario runner.
"""

from .coefficients import CoefficientF, CoefficientG, constant_G, linear_G, nemytskii_G, zero_G
from .rough_path import (
    Grid,
    GridRoughPath,
    QCovariance,
    VPath,
    assemble_qfbm,
    chen_defect,
    lift_piecewise_linear,
    sample_fbm,
    shift_rough_path,
)
from .scenario import Scenario, ScenarioError, load_scenario, standard_scenario
from .semigroup import SpectralSemigroup, dirichlet_laplacian, explicit, identity
from .sewing import Germ, sew
from .solver import ControlledPair, direct_solve, picard_fixed_point, solve_global

__version__ = "0.1.0"

__all__ = [
    "CoefficientF", "CoefficientG", "constant_G", "linear_G", "nemytskii_G", "zero_G",
    "Grid", "GridRoughPath", "QCovariance", "VPath", "assemble_qfbm", "chen_defect",
    "lift_piecewise_linear", "sample_fbm", "shift_rough_path",
    "Scenario", "ScenarioError", "load_scenario", "standard_scenario",
    "SpectralSemigroup", "dirichlet_laplacian", "explicit", "identity",
    "Germ", "sew",
    "ControlledPair", "direct_solve", "picard_fixed_point", "solve_global",
]
