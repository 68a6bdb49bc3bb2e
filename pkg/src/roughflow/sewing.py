"""Semigroup sewing of two-parameter germs on dyadic partitions.

Given a germ ``Xi[v, u]`` that is nearly twisted-additive, the sewn
increment over ``[s, t]`` is the limit of

    sum over [u, v] in P_n of S(t - v) Xi[v, u]

along the dyadic partitions ``P_n`` of ``[s, t]``.  The engine evaluates these
sums level by level, reports successive-level differences and, optionally,
the fractional-domain size of all dyadic sub-increments.
"""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .rough_path import Grid
from .semigroup import SpectralSemigroup

__all__ = [
    "SewingError",
    "SewingNotConverged",
    "Germ",
    "SewnIncrements",
    "additive_germ",
    "sew",
    "sew_adaptive",
    "check_shift_property",
    "sew_with_Deps_tracking",
    "level_decay_ratio",
    "estimate_germ_exponents",
    "dump_level_table",
    "max_level",
]


class SewingError(ValueError):
    """Sewing request outside the supported regime."""


class SewingNotConverged(RuntimeError):
    """Level cap reached before the successive-level difference met the tolerance."""

    def __init__(self, message: str, last_defect: float, level: int):
        super().__init__(message)
        self.last_defect = last_defect
        self.level = level


def max_level(default: int = 16) -> int:
    """Dyadic depth cap, overridable with ``ROUGHFLOW_MAX_LEVEL``."""
    raw = os.environ.get("ROUGHFLOW_MAX_LEVEL")
    return int(raw) if raw else default


@dataclass(frozen=True)
class Germ:
    """Two-parameter germ on the nodes of ``grid``.

    Parameters
    ----------
    eval : callable
        ``eval(u, v)`` for node indices ``u <= v`` returns an array whose
        first axis is the spectral mode.
    alpha_decl, rho_decl : float
        Declared regularity of the germ and of its twisted-additivity defect.
    grid : Grid
    batch : callable, optional
        ``batch(u_arr, v_arr)`` returning the stacked values, shape ``(m, W, ...)``.
    """

    eval: Callable[[int, int], np.ndarray]
    alpha_decl: float
    rho_decl: float
    grid: Grid
    batch: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def many(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        if self.batch is not None:
            return np.asarray(self.batch(u, v), dtype=float)
        return np.stack([np.asarray(self.eval(int(a), int(b)), dtype=float) for a, b in zip(u, v)])

    def shifted(self, k: int) -> "Germ":
        """Germ ``(u, v) -> Xi[v + k, u + k]`` on the grid starting at node ``k``."""
        g = self.grid
        base = self.batch
        return Germ(
            lambda u, v: self.eval(u + k, v + k),
            self.alpha_decl,
            self.rho_decl,
            Grid(0.0, g.h * (g.n_cells - k), g.n_cells - k),
            None if base is None else (lambda u, v: base(u + k, v + k)),
        )


@dataclass
class SewnIncrements:
    """Result of a sewing call.

    Attributes
    ----------
    value : ndarray
        Sewn increment over ``[s, t]`` at ``level_used``.
    values : dict
        ``(i, u)`` node pairs to the sewn increment over ``[t_i, t_u]`` for every
        node ``u`` of the final partition.
    level_used : int
    defect_estimate : float
        Sup norm of the last successive-level difference.
    levels : list of dict
        Per level: ``level``, ``n_intervals``, ``diff_sup`` and ``value_sup``.
    hat_defect : float
        Twisted-additivity defect at the midpoint.
    extra : dict
    """

    value: np.ndarray
    values: dict
    level_used: int
    defect_estimate: float
    levels: list
    hat_defect: float = 0.0
    extra: dict = field(default_factory=dict)


def _mode_decay(sg: SpectralSemigroup, dt, ndim: int) -> np.ndarray:
    d = sg.decay(dt)
    return d.reshape(d.shape + (1,) * (ndim - d.ndim))


def _check(germ: Germ, s: float, t: float, level: int) -> tuple[int, int]:
    if germ.rho_decl <= 1:
        raise SewingError(f"declared rho = {germ.rho_decl} <= 1: no sewing guarantee")
    if level < 0:
        raise SewingError("level must be nonnegative")
    i, j = germ.grid.index(s), germ.grid.index(t)
    if i > j:
        raise SewingError("need s <= t")
    if (j - i) % (2**level):
        raise SewingError(f"[{s}, {t}] holds {j - i} cells, not divisible by 2^{level}")
    return i, j


def _riemann(germ: Germ, sg: SpectralSemigroup, i: int, j: int, level: int,
             with_prefix: bool = False):
    """Level-``level`` compensated sum over nodes ``i..j``."""
    m = 2**level
    step = (j - i) // m
    u = i + step * np.arange(m)
    vals = germ.many(u, u + step)
    h = germ.grid.h
    ndim = vals.ndim - 1
    w = _mode_decay(sg, h * (j - (u + step)), ndim + 1)
    total = (w * vals).sum(axis=0)
    if not with_prefix:
        return total, None
    prefix = {}
    acc = np.zeros_like(vals[0])
    step_decay = _mode_decay(sg, h * step, ndim)
    prefix[(i, i)] = acc
    for k in range(m):
        acc = step_decay * acc + vals[k]
        prefix[(i, int(u[k] + step))] = acc
    return total, prefix


def sew(germ: Germ, sg: SpectralSemigroup, s: float, t: float, level: int) -> SewnIncrements:
    """Dyadic compensated Riemann sums of ``germ`` over ``[s, t]`` up to ``level``.

    Level 0 is the germ itself; the level table records the sup norm of each
    successive difference.
    """
    i, j = _check(germ, s, t, level)
    if i == j:
        z = np.zeros_like(np.asarray(germ.eval(i, i), dtype=float))
        return SewnIncrements(z, {(i, i): z}, level, 0.0,
                              [{"level": 0, "n_intervals": 0, "diff_sup": 0.0, "value_sup": 0.0}])
    table = []
    prev = None
    value, prefix = None, None
    for lv in range(level + 1):
        value, prefix = _riemann(germ, sg, i, j, lv, with_prefix=(lv == level))
        diff = float("nan") if prev is None else float(np.abs(value - prev).max())
        table.append({"level": lv, "n_intervals": 2**lv, "diff_sup": diff,
                      "value_sup": float(np.abs(value).max())})
        prev = value
    defect = table[-1]["diff_sup"] if level > 0 else float("nan")
    hat = 0.0
    if level >= 1:
        mid = (i + j) // 2
        left, _ = _riemann(germ, sg, i, mid, level - 1)
        right, _ = _riemann(germ, sg, mid, j, level - 1)
        hat = float(np.abs(value - right - _mode_decay(sg, germ.grid.h * (j - mid), value.ndim) * left).max())
    return SewnIncrements(value, prefix, level, defect, table, hat)


def sew_adaptive(germ: Germ, sg: SpectralSemigroup, s: float, t: float, tol: float,
                 cap: int | None = None) -> SewnIncrements:
    """Smallest level ``>= 1`` whose successive-level difference is ``<= tol``.

    Raises
    ------
    SewingNotConverged
        When the cap (``ROUGHFLOW_MAX_LEVEL`` or the dyadic depth of ``[s, t]``)
        is reached first; the exception carries the last difference.
    """
    if not tol > 0:
        raise SewingError("tol must be positive")
    i, j = _check(germ, s, t, 0)
    if i == j:
        return sew(germ, sg, s, t, 0)
    depth = 0
    while (j - i) % (2 ** (depth + 1)) == 0:
        depth += 1
    limit = min(depth, max_level() if cap is None else cap)
    if limit < 1:
        raise SewingError("[s, t] admits no dyadic refinement")
    prev, _ = _riemann(germ, sg, i, j, 0)
    diff = float("inf")
    for lv in range(1, limit + 1):
        cur, _ = _riemann(germ, sg, i, j, lv)
        diff = float(np.abs(cur - prev).max())
        if diff <= tol:
            return sew(germ, sg, s, t, lv)
        prev = cur
    raise SewingNotConverged(
        f"successive difference {diff:.3e} above tol {tol:.3e} at level cap {limit}", diff, limit
    )


def additive_germ(values, sg: SpectralSemigroup, grid: Grid, alpha: float = 1.0) -> Germ:
    """Exactly twisted-additive germ ``Xi[v, u] = f_v - S(v - u) f_u`` of a grid path."""
    f = np.asarray(values, dtype=float)  # (n_nodes, W, ...)

    def batch(u, v):
        u = np.asarray(u)
        v = np.asarray(v)
        d = sg.decay(grid.h * (v - u))
        d = d.reshape(d.shape + (1,) * (f.ndim - 2))
        return f[v] - d * f[u]

    return Germ(lambda u, v: batch(np.array([u]), np.array([v]))[0], alpha, 2.0, grid, batch)


def check_shift_property(germ: Germ, sg: SpectralSemigroup, tau: float, s: float, t: float,
                         level: int, shifted_germ: Germ | None = None) -> float:
    """Sup residual between sewing over ``[s, t]`` and the shifted germ over ``[s-tau, t-tau]``.

    ``shifted_germ`` defaults to ``germ`` re-indexed by ``tau``; pass a germ
    rebuilt from shifted data to test a genuine covariance statement.
    """
    g = germ.grid
    if not 0 <= tau <= s - g.t0 + 1e-12:
        raise SewingError("need tau <= s")
    k = g.index(g.t0 + tau)
    other = germ.shifted(k) if shifted_germ is None else shifted_germ
    lhs = sew(germ, sg, s, t, level).value
    rhs = sew(other, sg, s - tau - g.t0 + other.grid.t0, t - tau - g.t0 + other.grid.t0, level).value
    return float(np.abs(lhs - rhs).max())


def _deps_norm(sg: SpectralSemigroup, eps: float, x: np.ndarray) -> float:
    flat = x.reshape(x.shape[0], -1)
    base = np.linalg.norm(flat)
    if eps == 0:
        return float(base)
    return float(base + np.linalg.norm(sg.power_weights(eps)[:, None] * flat))


def sew_with_Deps_tracking(germ: Germ, sg: SpectralSemigroup, s: float, t: float, level: int,
                           eps: float, alpha_prime: float) -> SewnIncrements:
    """:func:`sew` plus the ``D_eps`` size of every dyadic sub-increment.

    Sub-increments are assembled bottom-up from the level-``level`` leaves.
    ``extra["deps_sup"]`` holds the sup over tree nodes of
    ``|I[v, u]|_{D_eps} / ((v - u)^alpha_prime + (v - u)^(rho - eps))`` and
    ``extra["deps_rows"]`` the per-depth sups.
    """
    if not 0 <= eps < 1:
        raise SewingError("eps must lie in [0, 1)")
    out = sew(germ, sg, s, t, level)
    i, j = germ.grid.index(s), germ.grid.index(t)
    if i == j:
        out.extra.update(deps_sup=0.0, deps_rows=[])
        return out
    m = 2**level
    step = (j - i) // m
    u = i + step * np.arange(m)
    nodes = list(germ.many(u, u + step))
    h = germ.grid.h
    rho = germ.rho_decl
    rows = []
    best = 0.0
    width = step
    depth = level
    while True:
        dt = width * h
        scale = dt**alpha_prime + dt ** (rho - eps)
        sup = max(_deps_norm(sg, eps, x) for x in nodes) / scale
        rows.append({"depth": depth, "length": dt, "sup": sup})
        best = max(best, sup)
        if len(nodes) == 1:
            break
        d = _mode_decay(sg, dt, nodes[0].ndim)
        nodes = [nodes[2 * k + 1] + d * nodes[2 * k] for k in range(len(nodes) // 2)]
        width *= 2
        depth -= 1
    out.extra.update(deps_sup=best, deps_rows=rows)
    return out


def level_decay_ratio(sewn: SewnIncrements, lo: int = 4, hi: int | None = None) -> float:
    """Geometric ratio fitted to the successive-level differences on levels ``lo..hi``."""
    rows = [r for r in sewn.levels if r["level"] >= lo and (hi is None or r["level"] <= hi)]
    lv = np.array([r["level"] for r in rows], dtype=float)
    d = np.array([r["diff_sup"] for r in rows], dtype=float)
    ok = d > 0
    if ok.sum() < 2:
        return 0.0
    slope = np.polyfit(lv[ok], np.log(d[ok]), 1)[0]
    return float(np.exp(slope))


def estimate_germ_exponents(germ: Germ, sg: SpectralSemigroup, s: float, t: float,
                            levels=range(2, 9), warn: bool = True) -> dict:
    """Log-log fit of the germ size and of its twisted-additivity defect.

    For each dyadic level the sup of ``|Xi[v, u]|`` and of
    ``|Xi[v, u] - Xi[v, m] - S(v - m) Xi[m, u]|`` (``m`` the midpoint) is
    regressed on ``v - u``.  A warning is issued when a fitted slope differs
    from the declared exponent by more than 0.3.
    """
    i, j = germ.grid.index(s), germ.grid.index(t)
    h = germ.grid.h
    lens, sizes, defects = [], [], []
    for lv in levels:
        m = 2**lv
        if (j - i) % (2 * m):
            break
        step = (j - i) // m
        u = i + step * np.arange(m)
        v = u + step
        mid = u + step // 2
        full = germ.many(u, v)
        left = germ.many(u, mid)
        right = germ.many(mid, v)
        d = _mode_decay(sg, h * (step // 2), full.ndim - 1)
        defect = full - right - d[None] * left
        lens.append(step * h)
        sizes.append(np.abs(full).max())
        defects.append(np.abs(defect).max())
    lens = np.log(np.array(lens))
    out = {"alpha_fit": float("nan"), "rho_fit": float("nan")}
    if lens.size >= 2:
        if min(sizes) > 0:
            out["alpha_fit"] = float(np.polyfit(lens, np.log(sizes), 1)[0])
        if min(defects) > 0:
            out["rho_fit"] = float(np.polyfit(lens, np.log(defects), 1)[0])
    out["consistent"] = True
    for key, decl in (("alpha_fit", germ.alpha_decl), ("rho_fit", germ.rho_decl)):
        val = out[key]
        if np.isfinite(val) and abs(val - decl) > 0.3:
            out["consistent"] = False
            if warn:
                warnings.warn(f"{key} = {val:.3f} deviates from declared {decl:.3f}", stacklevel=2)
    return out


def dump_level_table(sewn: SewnIncrements, path) -> None:
    """Write the level table as CSV (``level,n_intervals,diff_sup,value_sup``)."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["level", "n_intervals", "diff_sup", "value_sup"])
        writer.writeheader()
        for row in sewn.levels:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
