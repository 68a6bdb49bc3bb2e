"""Controlled pairs, the fixed-point map and the global solver.

A controlled pair ``(y, z)`` lives on the nodes of a driver grid.  The
operator-argument component ``z[t, s](E)`` is linear in ``E`` and diagonal in
the output mode, so it is stored through two cumulative arrays:

    Z[t, s][k, l, j] = qcum[t] - S(t - s) qcum[s] - ya[s, l] J(s, t)[k, j],
    z[t, s](E)_k = sum_{l, j} E[k, l, j] Z[t, s][k, l, j],

where ``qcum`` is the twisted cumulative sum of the per-cell ``Xi^(z)``
tensors and ``ya`` the path the ``a``-part of that germ was built from.  Every
pair of this form satisfies ``z[t,s] - z[t,m] - S(t-m) z[m,s] =
omega_S[t,m](E (ya_m - ya_s))`` identically.

The fixed-point map sews both germs on the cells of the grid, which turns
the fixed point into a one-step exponential scheme; Picard iteration of the
map converges to it, and :func:`direct_solve` computes it by forward
recursion.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .coefficients import CoefficientF, CoefficientG
from .convolution import ConvolutionTables, operator_norm, tables_for
from .rough_path import (
    Grid,
    GridRoughPath,
    VPath,
    path_norms,
    shift_rough_path,
    weighted_holder_norm,
)
from .semigroup import SpectralSemigroup, d_gamma_norm, hat_cumsum
from .sewing import Germ

__all__ = [
    "PicardNotConverged",
    "HorizonUnderflow",
    "JunctionMismatch",
    "ControlledPair",
    "RemainderReport",
    "SegmentInfo",
    "SolveReport",
    "default_beta",
    "initial_pair",
    "germ_y",
    "germ_z",
    "apply_M",
    "pair_distance",
    "picard_fixed_point",
    "direct_solve",
    "remainders",
    "local_horizon",
    "concatenate",
    "concatenated_z",
    "constraint_residual",
    "solve_global",
]

log = logging.getLogger(__name__)


class PicardNotConverged(RuntimeError):
    """Picard iteration exhausted ``max_iter``; a shorter horizon should help."""


class HorizonUnderflow(RuntimeError):
    """The local horizon fell below one grid cell."""


class JunctionMismatch(ValueError):
    """The second solution does not start where the first one ends."""


def default_beta(alpha: float) -> float:
    """``beta = (1 - alpha) / 2 + 0.02``, so that ``alpha + 2 beta > 1``."""
    return (1.0 - alpha) / 2.0 + 0.02


@dataclass(eq=False)
class ControlledPair:
    """Solution pair on the grid of ``tables``.

    Attributes
    ----------
    tables : ConvolutionTables
        Driver and semigroup data.
    y : ndarray, shape (n_nodes, W)
    ya : ndarray, shape (n_nodes, W)
    qcum : ndarray, shape (n_nodes, W, W, V)
    """

    tables: ConvolutionTables
    y: np.ndarray
    ya: np.ndarray
    qcum: np.ndarray

    @property
    def grid(self) -> Grid:
        return self.tables.grid

    @property
    def rp(self) -> GridRoughPath:
        return self.tables.rp

    @property
    def sg(self) -> SpectralSemigroup:
        return self.tables.sg

    @property
    def xi(self) -> np.ndarray:
        return self.y[0]

    def Z(self, i, j) -> np.ndarray:
        """Tensor of ``z[t_j, t_i]``, shape ``(..., W, W, V)``."""
        i = np.asarray(i)
        j = np.asarray(j)
        tab = self.tables
        d = tab.decay(j - i)[..., :, None, None]
        return self.qcum[j] - d * self.qcum[i] - self.ya[i][..., None, :, None] * tab.J(i, j)[..., :, None, :]

    def z(self, i, j, E) -> np.ndarray:
        """``z[t_j, t_i](E)`` for node indices."""
        return np.einsum("...klj,...klj->...k", self.Z(i, j), np.asarray(E, dtype=float))

    def z_at(self, s: float, t: float, E) -> np.ndarray:
        return self.z(self.grid.index(s), self.grid.index(t), E)

    def zcell(self) -> np.ndarray:
        """``Z`` over every cell, shape ``(n_cells, W, W, V)``."""
        tab = self.tables
        jc = tab.kern.phi1[None, :, None] * tab.dw[:, None, :]
        return (
            self.qcum[1:]
            - tab.kern.decay[None, :, None, None] * self.qcum[:-1]
            - self.ya[:-1, None, :, None] * jc[:, :, None, :]
        )

    def restrict(self, i0: int, i1: int) -> "ControlledPair":
        """The pair on nodes ``i0..i1``, re-based to start at time 0."""
        tab = self.tables
        sub = shift_rough_path(tab.rp, tab.grid.time(i0) - tab.grid.t0, tab.grid.time(i1))
        m = np.arange(i1 - i0 + 1)
        q = self.qcum[i0 : i1 + 1] - tab.decay(m)[:, :, None, None] * self.qcum[i0]
        return ControlledPair(tables_for(sub, tab.sg), self.y[i0 : i1 + 1].copy(),
                              self.ya[i0 : i1 + 1].copy(), q)


def _cells_z(tab: ConvolutionTables, gdw: np.ndarray, ya_cells: np.ndarray) -> np.ndarray:
    """Per-cell ``Xi^(z)`` tensors ``(psi (G dw)_l + D ya_l) dw_j``."""
    k = tab.kern
    inner = k.iterated[None] * gdw[:, None, :] + k.mixed[None] * ya_cells[:, None, :]
    return inner[..., None] * tab.dw[:, None, None, :]


def _orbit(tab: ConvolutionTables, xi: np.ndarray) -> np.ndarray:
    return tab.decay(np.arange(tab.grid.n_nodes)) * xi


def initial_pair(rp: GridRoughPath, sg: SpectralSemigroup, xi, G: CoefficientG) -> ControlledPair:
    """Starting pair: ``y = S(.) xi`` and the ``z`` induced by it."""
    tab = tables_for(rp, sg)
    xi = np.asarray(xi, dtype=float)
    y = _orbit(tab, xi)
    gdw = np.einsum("ckj,cj->ck", G.eval(y[:-1]), tab.dw)
    qcum = hat_cumsum(_cells_z(tab, gdw, y[:-1]), tab.kern.decay)
    return ControlledPair(tab, y, y.copy(), qcum)


def germ_y(pair: ControlledPair, G: CoefficientG, beta: float) -> Germ:
    """``Xi^(y)[v, u] = omega_S[v,u](G(y_u)) + z[v,u](DG(y_u))``.

    Declared exponents: ``alpha`` and ``alpha + 2 beta``.
    """
    tab = pair.tables

    def batch(u, v):
        u = np.asarray(u)
        v = np.asarray(v)
        out = tab.omega_S(G.eval(pair.y[u]), u, v)
        if not G.is_constant:
            out = out + pair.z(u, v, G.d1(pair.y[u]))
        return out

    alpha = tab.rp.alpha
    return Germ(lambda u, v: batch(np.array([u]), np.array([v]))[0], alpha, alpha + 2 * beta,
                tab.grid, batch)


def germ_z(pair: ControlledPair, G: CoefficientG, beta: float, y_tilde=None, E=None) -> Germ:
    """``Xi^(z)[v, u](E) = b[v,u](E, G(y_u)) + a[v,u](E, y_tilde_u)``.

    Without ``E`` the germ returns the ``(W, W, V)`` tensor ``T`` with
    ``Xi(E)_k = sum E[k,l,j] T[k,l,j]``; with ``E`` it returns the vector.

    With ``y_tilde = pair.ya`` the cell-level sum over ``[s, t]`` equals
    ``z[t,s](E) + E(ya_s) J[t,s]``, where ``J[t,s] = int_s^t S(t-r) dw_r``
    carries the unpropagated anchor term.
    """
    tab = pair.tables
    yt = pair.y if y_tilde is None else np.asarray(y_tilde, dtype=float)

    def tensor(u: int, v: int) -> np.ndarray:
        K = G.eval(pair.y[u])
        t = np.einsum("la,klaj->klj", K, tab.b_tensor(u, v))
        return t + yt[u][None, :, None] * tab.a_tensor(u, v)

    if E is None:
        ev = tensor
    else:
        E = np.asarray(E, dtype=float)

        def ev(u, v):
            return np.einsum("klj,klj->k", E, tensor(u, v))

    alpha = tab.rp.alpha
    return Germ(ev, alpha, alpha + 2 * beta, tab.grid)


def apply_M(pair: ControlledPair, xi, G: CoefficientG, F: CoefficientF | None = None) -> ControlledPair:
    """One application of the fixed-point map on the grid of ``pair``.

    Both germs are sewn on the grid cells.  The drift, when present, enters
    through the exponential Euler weight ``h phi1 F(y_u)`` on each cell.
    """
    tab = pair.tables
    kern = tab.kern
    xi = np.asarray(xi, dtype=float)
    y = pair.y
    gdw = np.einsum("ckj,cj->ck", G.eval(y[:-1]), tab.dw)
    incr = kern.phi1 * gdw
    if not G.is_constant:
        incr = incr + np.einsum("cklj,cklj->ck", G.d1(y[:-1]), pair.zcell())
    if F is not None and not F.is_zero:
        incr = incr + tab.h * kern.phi1 * F.eval(y[:-1])
    y_new = _orbit(tab, xi) + hat_cumsum(incr, kern.decay)
    qcum = hat_cumsum(_cells_z(tab, gdw, y_new[:-1]), kern.decay)
    return ControlledPair(tab, y_new, y_new, qcum)


def pair_distance(p: ControlledPair, q: ControlledPair, beta: float, full: bool = True) -> float:
    """``||y_p - y_q||_{beta,beta}`` plus an ``alpha``-scaled ``z`` difference.

    The ``z`` part is the sup of ``|Z_p - Z_q| / (t - s)^alpha`` over single
    cells and over pairs anchored at the first node.  With ``full=False`` the
    ``y`` part is only the sup norm, a cheap lower bound.
    """
    alpha = p.rp.alpha
    dy = p.y - q.y
    h = p.grid.h
    dzc = np.sqrt(((p.zcell() - q.zcell()) ** 2).sum(axis=(1, 2, 3))).max() / h**alpha
    j = np.arange(1, p.grid.n_nodes)
    dz0 = np.sqrt(((p.Z(0, j) - q.Z(0, j)) ** 2).sum(axis=(1, 2, 3))) / (j * h) ** alpha
    zpart = max(float(dzc), float(dz0.max()))
    if full:
        return weighted_holder_norm(dy, p.grid, beta) + zpart
    return float(np.abs(dy).max()) + zpart


@dataclass
class PicardInfo:
    iterations: int
    history: list


def picard_fixed_point(rp: GridRoughPath, sg: SpectralSemigroup, xi, G: CoefficientG,
                       F: CoefficientF | None = None, beta: float | None = None,
                       tol: float = 1e-11, max_iter: int = 60,
                       start: ControlledPair | None = None):
    """Iterate :func:`apply_M` from :func:`initial_pair` until the step is below ``tol``.

    Returns
    -------
    pair : ControlledPair
    info : PicardInfo
        Iteration count and the step sizes.

    Raises
    ------
    PicardNotConverged
    """
    beta = default_beta(rp.alpha) if beta is None else beta
    pair = initial_pair(rp, sg, xi, G) if start is None else start
    history = []
    for it in range(1, max_iter + 1):
        new = apply_M(pair, xi, G, F)
        cheap = pair_distance(new, pair, beta, full=False)
        step = cheap if cheap >= tol else pair_distance(new, pair, beta, full=True)
        history.append(step)
        pair = new
        if step < tol:
            return pair, PicardInfo(it, history)
        if not np.isfinite(step):
            break
    raise PicardNotConverged(
        f"no convergence after {len(history)} iterations on [0, {rp.grid.length:g}] "
        f"(last step {history[-1]:.3e}); try a smaller horizon"
    )


def direct_solve(rp: GridRoughPath, sg: SpectralSemigroup, xi, G: CoefficientG,
                 F: CoefficientF | None = None) -> ControlledPair:
    """The fixed point by explicit forward recursion, one cell at a time."""
    tab = tables_for(rp, sg)
    k = tab.kern
    n = tab.grid.n_cells
    W = sg.dim_W
    y = np.zeros((n + 1, W))
    y[0] = np.asarray(xi, dtype=float)
    corr = k.mixed - k.phi1[:, None]
    for c in range(n):
        yc = y[c]
        dw = tab.dw[c]
        gdw = G.eval(yc) @ dw
        step = k.phi1 * gdw
        if not G.is_constant:
            zc = (k.iterated * gdw[None, :] + corr * yc[None, :])[:, :, None] * dw[None, None, :]
            step = step + np.einsum("klj,klj->k", G.d1(yc), zc)
        if F is not None and not F.is_zero:
            step = step + tab.h * k.phi1 * F.eval(yc)
        y[c + 1] = k.decay * yc + step
    gdw = np.einsum("ckj,cj->ck", G.eval(y[:-1]), tab.dw)
    qcum = hat_cumsum(_cells_z(tab, gdw, y[:-1]), k.decay)
    return ControlledPair(tab, y, y.copy(), qcum)


def constraint_residual(pair: ControlledPair, E, triples) -> float:
    """Max of ``|z[t,s] - z[t,m] - S(t-m) z[m,s] - omega_S[t,m](E(y_m - y_s))|``."""
    tab = pair.tables
    E = np.asarray(E, dtype=float)
    worst = 0.0
    for i, m, j in triples:
        lhs = pair.z(i, j, E) - pair.z(m, j, E) - tab.decay(j - m) * pair.z(i, m, E)
        rhs = tab.omega_S(np.einsum("klj,l->kj", E, pair.y[m] - pair.y[i]), m, j)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


@dataclass
class RemainderReport:
    """Norms entering ``Phi_T``; ``RZ`` is a lower bound of the sup over ``|E| <= 1``."""

    RY_norm_2beta: float
    RZ_norm_alpha2beta: float
    y_inf_D2beta: float
    phi_T: float
    RZ_hilbert_schmidt: float = 0.0
    RZ_sampled: float = 0.0
    stride: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


def _auto_stride(n_nodes: int, W: int, V: int, budget: float = 4e7) -> int:
    work = 0.5 * n_nodes**2 * W * W * V
    return max(1, int(math.ceil(work / budget)))


def remainders(pair: ControlledPair, G: CoefficientG, beta: float, E_sample_count: int = 32,
               seed: int = 0, stride: int | None = None, top: int = 16) -> RemainderReport:
    """``||R^Y||_{2 beta}``, ``||R^Z||_{alpha + 2 beta}``, ``||y||_{inf, D_{2 beta}}`` and their sum.

    ``R^Y[t,s] = y_t - S(t-s) y_s - omega_S[t,s](G(y_s))`` and
    ``R^Z[t,s](E) = z[t,s](E) - b[t,s](E, G(y_s))``.  The ``E``-sup combines
    the exact sup over the Hilbert-Schmidt unit ball with ``E_sample_count``
    random unit-operator-norm tensors and the normalised ``DG(y_s)``
    directions, evaluated on the ``top`` largest pairs.  Both are lower
    bounds of the operator-norm sup.  ``stride`` subsamples the left
    endpoint ``s`` (default: chosen from the problem size).
    """
    tab = pair.tables
    sg = tab.sg
    alpha = tab.rp.alpha
    kern = tab.kern
    N = tab.grid.n_nodes
    W, V = tab.dim_W, tab.dim_V
    h = tab.h
    y = pair.y
    if stride is None:
        stride = _auto_stride(N, W, V)
    y_inf = float(d_gamma_norm(sg, 2 * beta, y).max())
    Gs = G.eval(y)                                   # (N, W, V)
    # P[s, t, k] = sum_j G_s[k, j] jcum[t, k, j]
    ry_best = 0.0
    rz_hs = 0.0
    candidates = []
    idx = np.arange(N)
    for s in range(0, N - 1, stride):
        t = idx[s:]
        m = t - s
        dec = tab.decay(m)                            # (M, W)
        P = np.einsum("kj,tkj->tk", Gs[s], tab.jcum[s:])
        om = P - dec * P[0]
        ry = y[s:] - dec * y[s] - om
        dt = m[1:] * h
        ry_best = max(ry_best, float((np.linalg.norm(ry[1:], axis=1) / dt ** (2 * beta)).max()))
        if G.is_zero:
            beff = np.zeros((t.size, W, W, V))
        else:
            dw = tab.dw[s:]
            gdw = dw @ Gs[s].T                        # (M-1, W)
            cells = (kern.mixed[None] * om[:-1, None, :] + kern.iterated[None] * gdw[:, None, :])
            beff = hat_cumsum(cells[..., None] * dw[:, None, None, :], kern.decay)
        rz = pair.Z(np.full(t.size, s), t) - beff
        hs = np.sqrt((rz[1:] ** 2).sum(axis=(2, 3))).max(axis=1) / dt ** (alpha + 2 * beta)
        a = int(np.argmax(hs))
        rz_hs = max(rz_hs, float(hs[a]))
        candidates.append((float(hs[a]), s, int(t[a + 1]), rz[a + 1]))
    sampled = 0.0
    if candidates and E_sample_count > 0:
        candidates.sort(key=lambda c: -c[0])
        rng = np.random.default_rng(seed)
        dirs = []
        for _ in range(E_sample_count):
            e = rng.standard_normal((W, W, V))
            dirs.append(e / operator_norm(e))
        for _, s, tt, rz in candidates[:top]:
            dg = G.d1(y[s])
            nrm = operator_norm(dg)
            local = dirs + ([dg / nrm] if nrm > 0 else [])
            scale = ((tt - s) * h) ** (alpha + 2 * beta)
            for e in local:
                sampled = max(sampled, float(np.linalg.norm(np.einsum("klj,klj->k", e, rz))) / scale)
    rz_norm = max(rz_hs, sampled)
    return RemainderReport(ry_best, rz_norm, y_inf, y_inf + ry_best + rz_norm, rz_hs, sampled, stride)


def local_horizon(xi_norm_r: float, rp_norms: tuple[float, float], G: CoefficientG, alpha: float,
                  T_max: float, h: float | None = None, c: float = 0.02) -> float:
    """Heuristic contraction horizon ``min(T_max, (1 / (2 C))^(1/alpha))``.

    ``C = c * |G|_bound * (|||w|||_alpha + ||w2||_{2 alpha}) * (1 + r)`` with
    ``r = max(1, |xi|)``.  With ``h`` the result is rounded down to whole cells.

    Raises
    ------
    HorizonUnderflow
        If the rounded horizon is shorter than one cell.
    """
    if G.is_zero:
        T = T_max
    else:
        r = max(1.0, float(xi_norm_r))
        C = c * G.bound(r) * (rp_norms[0] + rp_norms[1]) * (1.0 + r)
        T = T_max if C <= 0 else min(T_max, (1.0 / (2.0 * C)) ** (1.0 / alpha))
    if h is not None:
        cells = math.floor(T / h + 1e-9)
        if cells < 1:
            raise HorizonUnderflow(f"local horizon {T:.3e} below grid spacing {h:.3e}")
        T = cells * h
    return T


def _joined_driver(rp1: GridRoughPath, rp2: GridRoughPath) -> GridRoughPath:
    g1, g2 = rp1.grid, rp2.grid
    if abs(g1.h - g2.h) > 1e-12 * max(1.0, g1.h):
        raise ValueError("grids do not share a cell size")
    vals = np.vstack([rp1.values, rp2.values[1:] - rp2.values[0] + rp1.values[-1]])
    grid = Grid(g1.t0, g1.t0 + g1.h * (g1.n_cells + g2.n_cells), g1.n_cells + g2.n_cells)
    area = np.concatenate([rp1.area_adjacent, rp2.area_adjacent])
    return GridRoughPath(VPath(grid, vals), area, rp1.alpha)


def concatenate(sol1: ControlledPair, sol2: ControlledPair | None, atol: float = 1e-10) -> ControlledPair:
    """Join a solution with one started from its terminal value on the shifted driver."""
    if sol2 is None:
        return sol1
    gap = float(np.abs(sol2.y[0] - sol1.y[-1]).max())
    if gap > atol * max(1.0, float(np.abs(sol1.y[-1]).max())):
        raise JunctionMismatch(f"junction values differ by {gap:.3e}")
    rp = _joined_driver(sol1.rp, sol2.rp)
    tab = tables_for(rp, sol1.sg)
    m = np.arange(sol2.grid.n_nodes)
    q2 = sol2.qcum + tab.decay(m)[:, :, None, None] * sol1.qcum[-1]
    return ControlledPair(
        tab,
        np.vstack([sol1.y, sol2.y[1:]]),
        np.vstack([sol1.ya, sol2.ya[1:]]),
        np.concatenate([sol1.qcum, q2[1:]]),
    )


def concatenated_z(sol1: ControlledPair, sol2: ControlledPair, i: int, j: int, E) -> np.ndarray:
    """``z`` of the joined pair by cases, from the two pieces only.

    For ``s < T1 < t``: ``omega_S[t,T1](E(y1_T1 - y1_s)) + z2[t-T1, 0](E)
    + S(t - T1) z1[T1, s](E)``.
    """
    n1 = sol1.grid.n_cells
    E = np.asarray(E, dtype=float)
    if j <= n1:
        return sol1.z(i, j, E)
    if i >= n1:
        return sol2.z(i - n1, j - n1, E)
    t2 = sol2.tables
    dy = sol1.y[n1] - sol1.y[i]
    first = t2.omega_S(np.einsum("klj,l->kj", E, dy), 0, j - n1)
    return first + sol2.z(0, j - n1, E) + t2.decay(j - n1) * sol1.z(i, n1, E)


@dataclass
class SegmentInfo:
    start: float
    end: float
    cells: int
    iterations: int
    halvings: int
    phi_T: float | None = None
    RY_norm_2beta: float | None = None
    y_inf_D2beta: float | None = None


@dataclass
class SolveReport:
    """Diagnostics of :func:`solve_global`."""

    T: float
    n_cells: int
    segments: list = field(default_factory=list)
    fixed_point_residual: float | None = None
    constraint_residual: float | None = None
    y_beta_beta: float | None = None
    remainders: dict | None = None
    driver_norms: tuple | None = None

    @property
    def iterations(self) -> int:
        return sum(s.iterations for s in self.segments)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["iterations"] = self.iterations
        return out


def solve_global(T: float, rp: GridRoughPath, sg: SpectralSemigroup, xi, G: CoefficientG,
                 F: CoefficientF | None = None, beta: float | None = None, tol: float = 1e-11,
                 max_iter: int = 60, n_segments: int | None = None, horizon: float | None = None,
                 horizon_c: float = 0.02, max_halvings: int = 8, segment_diagnostics: bool = False,
                 final_checks: bool = False, n_E: int = 32, seed: int = 0):
    """Solve on ``[t0, t0 + T]`` by local fixed points on shifted drivers, joined end to end.

    Segment lengths come from :func:`local_horizon` unless ``n_segments``
    (equal split) or ``horizon`` (fixed length) is given; a segment whose
    Picard iteration fails is halved, at most ``max_halvings`` times.

    Returns
    -------
    pair : ControlledPair
    report : SolveReport
    """
    g = rp.grid
    n_total = g.index(g.t0 + T)
    if n_total < 1:
        raise ValueError("T must span at least one cell")
    alpha = rp.alpha
    beta = default_beta(alpha) if beta is None else beta
    norms = path_norms(rp.restrict(0, n_total), alpha)
    report = SolveReport(float(T), n_total, driver_norms=norms)
    xi = np.asarray(xi, dtype=float)
    pair = None
    pos = 0
    if n_segments is not None:
        bounds = np.linspace(0, n_total, int(n_segments) + 1).round().astype(int)
        plan = list(np.diff(bounds))
    while pos < n_total:
        y0 = xi if pair is None else pair.y[-1]
        if n_segments is not None:
            m = int(plan.pop(0))
        elif horizon is not None:
            m = max(1, int(math.floor(horizon / g.h + 1e-9)))
        else:
            Tl = local_horizon(float(np.linalg.norm(y0)), norms, G, alpha, T, g.h, horizon_c)
            m = int(round(Tl / g.h))
        m = min(m, n_total - pos)
        planned = m
        halvings = 0
        while True:
            sub = shift_rough_path(rp, g.h * pos, g.time(pos + m))
            try:
                seg, info = picard_fixed_point(sub, sg, y0, G, F, beta, tol, max_iter)
                break
            except PicardNotConverged:
                if halvings >= max_halvings or m == 1:
                    raise PicardNotConverged(
                        f"segment starting at t={g.time(pos):g} failed after {halvings} halvings"
                    )
                halvings += 1
                m = max(1, m // 2)
        if n_segments is not None and m < planned:
            plan.insert(0, planned - m)
        seginfo = SegmentInfo(g.time(pos), g.time(pos + m), m, info.iterations, halvings)
        if segment_diagnostics:
            rep = remainders(seg, G, beta, E_sample_count=0)
            seginfo.phi_T = rep.phi_T
            seginfo.RY_norm_2beta = rep.RY_norm_2beta
            seginfo.y_inf_D2beta = rep.y_inf_D2beta
        report.segments.append(seginfo)
        pair = seg if pair is None else concatenate(pair, seg)
        pos += m
    if final_checks:
        again = apply_M(pair, xi, G, F)
        report.fixed_point_residual = pair_distance(again, pair, beta)
        rng = np.random.default_rng(seed)
        n = pair.grid.n_cells
        worst = 0.0
        for _ in range(n_E):
            E = rng.standard_normal(pair.qcum.shape[1:])
            E /= operator_norm(E)
            tri = np.sort(rng.integers(0, n + 1, size=(4, 3)), axis=1)
            worst = max(worst, constraint_residual(pair, E, tri))
        report.constraint_residual = worst
        report.y_beta_beta = weighted_holder_norm(pair.y, pair.grid, beta)
    log.debug("solve_global: %d segments, %d iterations", len(report.segments), report.iterations)
    return pair, report
