"""Scenario configuration: one YAML mapping describing a complete experiment.

Schema (all keys optional except where noted)::

    hurst: 0.45                 # H in (1/3, 1/2]
    alpha: 0.40                 # default H - 0.05; must satisfy 1/3 < alpha < H
    alpha_prime: 0.43           # default H - 0.02
    beta: 0.32                  # default (1 - alpha) / 2 + 0.02; alpha + 2 beta > 1
    q_eigenvalues: [1.0, 0.5]   # fixes dim_V
    semigroup: {preset: dirichlet_laplacian, dim: 4, scale: 0.1}
    driver: qfbm                # or "smooth": w_t = (sin t, 1 - cos t)
    G: {family: nemytskii, seed: 2, scale: 1.0, offset: 0.5}
    F: {family: zero}
    xi: [1.0, -0.5, 0.3, 0.2]   # length dim_W
    T: 1.0
    level: 10
    seed: 0
    seeds: [0, 1, 2, 3, 4]
    tolerances: {picard: 1.0e-11, max_iter: 60, ...}
    studies:
      converge: {levels: [5, 6, 7, 8, 9, 10]}
      cocycle: {t: [...], tau: [...]}
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import yaml

from .coefficients import CoefficientF, CoefficientG, f_from_config, g_from_config
from .rough_path import (
    Grid,
    GridRoughPath,
    QCovariance,
    VPath,
    assemble_qfbm,
    lift_piecewise_linear,
)
from .semigroup import SpectralSemigroup, from_preset
from .sewing import max_level

__all__ = ["ScenarioError", "Scenario", "DEFAULT_TOLERANCES", "load_scenario", "standard_scenario"]


class ScenarioError(ValueError):
    """Configuration violates a standing assumption; the message names it."""


DEFAULT_TOLERANCES = {
    "picard": 1e-11,
    "max_iter": 60,
    "chen": 1e-10,
    "symmetry": 1e-10,
    "omega_S": 1e-12,
    "algebraic": 1e-8,
    "constraint": 1e-8,
    "shift": 1e-10,
    "cocycle": 1e-6,
}

_KNOWN = {
    "hurst", "alpha", "alpha_prime", "beta", "q_eigenvalues", "semigroup", "driver", "G", "F",
    "xi", "T", "level", "seed", "seeds", "tolerances", "studies", "horizon_c",
}


@dataclass
class Scenario:
    hurst: float = 0.45
    alpha: float | None = None
    alpha_prime: float | None = None
    beta: float | None = None
    q_eigenvalues: list = field(default_factory=lambda: [1.0, 0.5])
    semigroup: dict = field(default_factory=lambda: {"preset": "dirichlet_laplacian", "dim": 4, "scale": 0.1})
    driver: str = "qfbm"
    G: dict = field(default_factory=lambda: {"family": "nemytskii", "seed": 2})
    F: dict = field(default_factory=lambda: {"family": "zero"})
    xi: list | None = None
    T: float = 1.0
    level: int = 10
    seed: int = 0
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    tolerances: dict = field(default_factory=dict)
    studies: dict = field(default_factory=dict)
    horizon_c: float = 0.02

    def __post_init__(self):
        if self.alpha is None:
            self.alpha = round(self.hurst - 0.05, 12)
        if self.alpha_prime is None:
            self.alpha_prime = round(self.hurst - 0.02, 12)
        if self.beta is None:
            self.beta = round((1.0 - self.alpha) / 2.0 + 0.02, 12)
        self.tolerances = {**DEFAULT_TOLERANCES, **(self.tolerances or {})}
        self.validate()

    @classmethod
    def from_mapping(cls, data: dict | None) -> "Scenario":
        data = dict(data or {})
        unknown = set(data) - _KNOWN
        if unknown:
            raise ScenarioError(f"unknown config keys: {sorted(unknown)}")
        return cls(**copy.deepcopy(data))

    def to_mapping(self) -> dict:
        return {k: copy.deepcopy(getattr(self, k)) for k in sorted(_KNOWN)}

    def validate(self) -> None:
        H, a, ap, b = self.hurst, self.alpha, self.alpha_prime, self.beta
        if not 1.0 / 3.0 < H <= 0.5:
            raise ScenarioError(f"invariant 1/3 < H <= 1/2 violated (H={H})")
        if not 1.0 / 3.0 < a:
            raise ScenarioError(f"invariant 1/3 < alpha violated (alpha={a})")
        if not a < H:
            raise ScenarioError(f"invariant alpha < H violated (alpha={a}, H={H})")
        if not a < ap < H:
            raise ScenarioError(f"invariant alpha < alpha_prime < H violated (alpha_prime={ap})")
        if not a + 2 * b > 1:
            raise ScenarioError(f"invariant alpha + 2 beta > 1 violated (alpha={a}, beta={b})")
        if not 0 < b < 1:
            raise ScenarioError(f"invariant 0 < beta < 1 violated (beta={b})")
        if not self.T > 0:
            raise ScenarioError(f"invariant T > 0 violated (T={self.T})")
        if int(self.level) < 1:
            raise ScenarioError(f"invariant level >= 1 violated (level={self.level})")
        if len(self.q_eigenvalues) < 1 or min(self.q_eigenvalues) < 0:
            raise ScenarioError("invariant dim_V >= 1 with nonnegative q_eigenvalues violated")
        if self.driver not in ("qfbm", "smooth"):
            raise ScenarioError(f"unknown driver {self.driver!r}")
        if self.driver == "smooth" and self.dim_V != 2:
            raise ScenarioError("invariant dim_V = 2 for the smooth driver violated")
        try:
            sg = self.semigroup_op()
        except (KeyError, ValueError) as exc:
            raise ScenarioError(f"invalid semigroup: {exc}") from exc
        if sg.dim_W < 1:
            raise ScenarioError("invariant dim_W >= 1 violated")
        if self.xi is not None and len(self.xi) != sg.dim_W:
            raise ScenarioError(f"invariant len(xi) = dim_W violated ({len(self.xi)} != {sg.dim_W})")
        try:
            self.coefficient_G(sg)
            self.coefficient_F()
        except (KeyError, ValueError, TypeError) as exc:
            raise ScenarioError(f"invalid coefficient: {exc}") from exc

    @property
    def dim_V(self) -> int:
        return len(self.q_eigenvalues)

    @property
    def dim_W(self) -> int:
        return self.semigroup_op().dim_W

    @property
    def working_level(self) -> int:
        return min(int(self.level), max_level())

    def tol(self, key: str) -> float:
        return self.tolerances[key]

    def semigroup_op(self) -> SpectralSemigroup:
        return from_preset(self.semigroup)

    def coefficient_G(self, sg: SpectralSemigroup | None = None) -> CoefficientG:
        sg = self.semigroup_op() if sg is None else sg
        return g_from_config(self.G, sg, self.dim_V, self.beta)

    def coefficient_F(self) -> CoefficientF:
        return f_from_config(self.F, self.dim_W)

    def xi_vector(self) -> np.ndarray:
        if self.xi is not None:
            return np.asarray(self.xi, dtype=float)
        k = np.arange(1, self.dim_W + 1)
        return 1.0 / k

    def grid(self, level: int | None = None) -> Grid:
        lv = self.working_level if level is None else min(int(level), max_level())
        return Grid.dyadic(0.0, float(self.T), lv)

    def driver_path(self, seed: int | None = None, level: int | None = None) -> VPath:
        g = self.grid(level)
        if self.driver == "smooth":
            t = g.times
            return VPath(g, np.column_stack([np.sin(t), 1.0 - np.cos(t)]))
        s = self.seed if seed is None else seed
        return assemble_qfbm(QCovariance(self.q_eigenvalues), self.hurst, g, s)

    def rough_path(self, seed: int | None = None, level: int | None = None) -> GridRoughPath:
        return lift_piecewise_linear(self.driver_path(seed, level), self.alpha)

    def solve_kwargs(self) -> dict:
        return {
            "beta": self.beta,
            "tol": self.tol("picard"),
            "max_iter": int(self.tol("max_iter")),
            "horizon_c": self.horizon_c,
        }


def load_scenario(path) -> Scenario:
    """Read a YAML scenario file."""
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ScenarioError(f"config is not valid YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ScenarioError("config must be a mapping")
    return Scenario.from_mapping(data)


def standard_scenario(**overrides) -> Scenario:
    """H = 0.45, four Dirichlet modes (scale 0.1), Nemytskii ``G``, ``T = 1``, level 10."""
    base = {"xi": [1.0, -0.5, 0.3, 0.2]}
    base.update(overrides)
    return Scenario.from_mapping(base)
