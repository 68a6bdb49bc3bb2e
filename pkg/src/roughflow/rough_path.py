"""Grid rough paths: sampling, piecewise-linear lifts, Chen reconstruction, norms.

A rough path on a uniform grid is stored as the path values at the nodes and
one second-order increment per cell.  Increments over arbitrary node pairs are
reassembled with Chen's relation

    w2[t, s] = w2[u, s] + w2[t, u] + (w_u - w_s) (x) (w_t - w_u),

so storage stays linear in the number of nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg

__all__ = [
    "OffGridError",
    "Grid",
    "VPath",
    "GridRoughPath",
    "QCovariance",
    "default_exponents",
    "fbm_covariance",
    "sample_fbm",
    "sample_fbm_1d",
    "assemble_qfbm",
    "lift_piecewise_linear",
    "chen_reconstruct",
    "chen_defect",
    "rough_metric",
    "shift_rough_path",
    "holder_seminorm",
    "weighted_holder_norm",
    "sup_norm",
    "path_norms",
    "save_rough_path",
    "load_rough_path",
]

_TIME_TOL = 1e-9


class OffGridError(ValueError):
    """A requested time is not a node of the grid."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid ``t0 < t0 + h < ... < t1`` with ``n_cells`` cells.

    Dyadic grids (``n_cells = 2**level``) are built with :meth:`dyadic`;
    shifted and restricted grids may have any cell count.
    """

    t0: float
    t1: float
    n_cells: int

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)) or self.t1 <= self.t0:
            raise ValueError(f"grid needs t1 > t0, got [{self.t0}, {self.t1}]")
        if int(self.n_cells) < 1:
            raise ValueError("grid needs at least one cell")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @classmethod
    def dyadic(cls, t0: float, t1: float, level: int) -> "Grid":
        if level < 0:
            raise ValueError("level must be nonnegative")
        return cls(float(t0), float(t1), 2 ** int(level))

    @property
    def level(self) -> int | None:
        """Dyadic depth, or ``None`` if the cell count is not a power of two."""
        n = self.n_cells
        return n.bit_length() - 1 if n & (n - 1) == 0 else None

    @property
    def h(self) -> float:
        return (self.t1 - self.t0) / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @property
    def length(self) -> float:
        return self.t1 - self.t0

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_nodes)

    def time(self, i: int) -> float:
        return self.t0 + self.h * i

    def index(self, t: float) -> int:
        """Node index of time ``t``; raises :class:`OffGridError` otherwise."""
        x = (float(t) - self.t0) / self.h
        i = int(round(x))
        if abs(x - i) > _TIME_TOL * max(1.0, abs(x)) or not 0 <= i <= self.n_cells:
            raise OffGridError(f"time {t} is not a node of {self}")
        return i

    def sub(self, i0: int, i1: int) -> "Grid":
        """Grid of nodes ``i0..i1``."""
        if not 0 <= i0 < i1 <= self.n_cells:
            raise ValueError(f"invalid node range ({i0}, {i1}) for {self.n_cells} cells")
        return Grid(self.time(i0), self.time(i1), i1 - i0)

    def refine(self, factor: int) -> "Grid":
        return Grid(self.t0, self.t1, self.n_cells * int(factor))

    def aligned_with(self, other: "Grid") -> bool:
        """True if the coarser grid's nodes are nodes of the finer one."""
        coarse, fine = sorted((self, other), key=lambda g: g.n_cells)
        ratio = fine.n_cells / coarse.n_cells
        return (
            abs(coarse.t0 - fine.t0) <= _TIME_TOL * max(1.0, abs(fine.t0))
            and abs(coarse.t1 - fine.t1) <= _TIME_TOL * max(1.0, abs(fine.t1))
            and float(ratio).is_integer()
        )


@dataclass(frozen=True, eq=False)
class VPath:
    """Values of a ``V``-valued path at the nodes of a grid, shape ``(n_nodes, dim_V)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.n_nodes:
            raise ValueError(f"values must have shape ({self.grid.n_nodes}, dim_V), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim_V(self) -> int:
        return self.values.shape[1]

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)


@dataclass(frozen=True, eq=False)
class GridRoughPath:
    """Path plus per-cell second-order increments ``area_adjacent[i] = w2[t_{i+1}, t_i]``."""

    path: VPath
    area_adjacent: np.ndarray
    alpha: float

    def __post_init__(self):
        a = np.array(self.area_adjacent, dtype=float)
        n, d = self.path.grid.n_cells, self.path.dim_V
        if a.shape != (n, d, d):
            raise ValueError(f"area_adjacent must have shape ({n}, {d}, {d}), got {a.shape}")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        a.setflags(write=False)
        object.__setattr__(self, "area_adjacent", a)
        # prefix sums for O(1) Chen reconstruction of any pair
        w = self.path.values
        dw = self.path.increments
        pa = np.zeros((n + 1, d, d))
        pm = np.zeros((n + 1, d, d))
        np.cumsum(a, axis=0, out=pa[1:])
        np.cumsum(w[:-1, :, None] * dw[:, None, :], axis=0, out=pm[1:])
        object.__setattr__(self, "_prefix", pa + pm)

    @property
    def grid(self) -> Grid:
        return self.path.grid

    @property
    def values(self) -> np.ndarray:
        return self.path.values

    @property
    def increments(self) -> np.ndarray:
        return self.path.increments

    @property
    def dim_V(self) -> int:
        return self.path.dim_V

    def increment(self, i, j) -> np.ndarray:
        """``w_{t_j} - w_{t_i}`` for node indices (broadcasts)."""
        return self.values[j] - self.values[i]

    def area(self, i, j) -> np.ndarray:
        """``w2[t_j, t_i]`` for node indices ``i <= j`` (broadcasts)."""
        i = np.asarray(i)
        j = np.asarray(j)
        w = self.values
        return (
            self._prefix[j]
            - self._prefix[i]
            - w[i][..., :, None] * (w[j] - w[i])[..., None, :]
        )

    def area_between(self, s: float, t: float) -> np.ndarray:
        return self.area(self.grid.index(s), self.grid.index(t))

    def restrict(self, i0: int, i1: int) -> "GridRoughPath":
        """Same path on nodes ``i0..i1`` (values are not re-based)."""
        return GridRoughPath(
            VPath(self.grid.sub(i0, i1), self.values[i0 : i1 + 1]),
            self.area_adjacent[i0:i1],
            self.alpha,
        )

    def refine(self, factor: int) -> "GridRoughPath":
        """Re-express a piecewise-linear lift on a grid ``factor`` times finer.

        Exact only when the stored areas are those of straight segments.
        """
        factor = int(factor)
        if factor == 1:
            return self
        r = np.arange(factor + 1) / factor
        w = self.values
        dw = self.increments
        fine = (w[:-1, None, :] + r[None, :-1, None] * dw[:, None, :]).reshape(-1, self.dim_V)
        fine = np.vstack([fine, w[-1:]])
        return lift_piecewise_linear(VPath(self.grid.refine(factor), fine), self.alpha)


@dataclass(frozen=True, eq=False)
class QCovariance:
    """Trace-class covariance truncated to ``dim_V`` eigen-directions."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).ravel()
        if lam.size < 1:
            raise ValueError("dim_V must be at least 1")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("covariance eigenvalues must be finite and nonnegative")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def dim_V(self) -> int:
        return self.eigenvalues.size

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())


def default_exponents(H: float) -> tuple[float, float]:
    """Working exponents ``(alpha, alpha_prime) = (H - 0.05, H - 0.02)``."""
    return H - 0.05, H - 0.02


def _check_hurst(H: float) -> None:
    if not 1.0 / 3.0 < H <= 0.5:
        raise ValueError(f"Hurst index must lie in (1/3, 1/2], got {H}")


def fbm_covariance(H: float, s, t) -> np.ndarray:
    """``E[B_s B_t] = (|s|^{2H} + |t|^{2H} - |t - s|^{2H}) / 2``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    e = 2.0 * H
    return 0.5 * (np.abs(s) ** e + np.abs(t) ** e - np.abs(t - s) ** e)


def _fgn_autocovariance(H: float, n: int) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    e = 2.0 * H
    return 0.5 * (np.abs(k + 1) ** e - 2.0 * k**e + np.abs(k - 1) ** e)


def _fgn_unit(H: float, n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Fractional Gaussian noise with unit step, shape ``(size, n)``.

    Circulant embedding; falls back to a Cholesky factor when the embedding
    has a materially negative eigenvalue.
    """
    r = _fgn_autocovariance(H, n)
    row = np.concatenate([r, r[-2:0:-1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-10 * eig.max():
        chol = np.linalg.cholesky(scipy.linalg.toeplitz(r[:n]))
        return rng.standard_normal((size, n)) @ chol.T
    eig = np.clip(eig, 0.0, None)
    m = row.size
    z = rng.standard_normal((size, m)) + 1j * rng.standard_normal((size, m))
    return np.fft.fft(np.sqrt(eig / m) * z, axis=1).real[:, :n]


def sample_fbm(H: float, grid: Grid, seed, size: int = 1) -> np.ndarray:
    """Sample ``size`` fBm paths on ``grid``, shape ``(size, n_nodes)``, started at 0.

    Parameters
    ----------
    H : float
        Hurst index in (1/3, 1/2].
    grid : Grid
        Uniform grid; the path is anchored at ``grid.t0``.
    seed : int or numpy.random.Generator
    size : int
        Number of independent paths.
    """
    _check_hurst(H)
    rng = np.random.default_rng(seed)
    fgn = _fgn_unit(H, grid.n_cells, rng, int(size)) * grid.h**H
    out = np.zeros((int(size), grid.n_nodes))
    np.cumsum(fgn, axis=1, out=out[:, 1:])
    return out


def sample_fbm_1d(H: float, grid: Grid, seed) -> np.ndarray:
    """One fBm path at the grid nodes; bit-identical for equal arguments."""
    return sample_fbm(H, grid, seed, 1)[0]


def assemble_qfbm(q: QCovariance, H: float, grid: Grid, seed) -> VPath:
    """Q-fBm ``sum_n sqrt(lambda_n) B^H_n e_n`` with independent components."""
    paths = sample_fbm(H, grid, seed, q.dim_V)
    return VPath(grid, (paths * np.sqrt(q.eigenvalues)[:, None]).T)


def lift_piecewise_linear(path: VPath, alpha: float | None = None) -> GridRoughPath:
    """Exact iterated integrals of the piecewise-linear interpolation of ``path``."""
    dw = path.increments
    area = 0.5 * dw[:, :, None] * dw[:, None, :]
    return GridRoughPath(path, area, 0.4 if alpha is None else float(alpha))


def chen_reconstruct(rp: GridRoughPath, s: float, t: float, order: str = "left") -> np.ndarray:
    """Compose the cell areas between nodes ``s <= t`` by repeated Chen steps.

    ``order="left"`` extends ``[s, u]`` cell by cell to the right,
    ``order="right"`` extends ``[u, t]`` cell by cell to the left.
    """
    i, j = rp.grid.index(s), rp.grid.index(t)
    if i > j:
        raise ValueError("chen_reconstruct needs s <= t")
    d = rp.dim_V
    w, a = rp.values, rp.area_adjacent
    acc = np.zeros((d, d))
    if order == "left":
        for k in range(i, j):
            acc = acc + a[k] + np.outer(w[k] - w[i], w[k + 1] - w[k])
    elif order == "right":
        for k in range(j - 1, i - 1, -1):
            acc = a[k] + acc + np.outer(w[k + 1] - w[k], w[j] - w[k + 1])
    else:
        raise ValueError("order must be 'left' or 'right'")
    return acc


def chen_defect(rp: GridRoughPath, i, u, j) -> np.ndarray:
    """Max-abs Chen defect for node triples ``i <= u <= j`` (broadcasts)."""
    i, u, j = np.broadcast_arrays(np.asarray(i), np.asarray(u), np.asarray(j))
    dus = rp.increment(i, u)
    dtu = rp.increment(u, j)
    res = rp.area(i, j) - rp.area(i, u) - rp.area(u, j) - dus[..., :, None] * dtu[..., None, :]
    return np.abs(res).max(axis=(-2, -1))


def _pair_blocks(n_nodes: int, block: int = 128) -> Iterable[np.ndarray]:
    for s0 in range(0, n_nodes - 1, block):
        yield np.arange(s0, min(s0 + block, n_nodes - 1))


def _increment_sup(values: np.ndarray, times: np.ndarray, exponent: float,
                   weight_beta: float | None = None, t_origin: float = 0.0) -> float:
    """``sup_{s<t} s^beta |v_t - v_s| / (t - s)^exponent`` over grid nodes."""
    n = values.shape[0]
    flat = values.reshape(n, -1)
    best = 0.0
    for s in _pair_blocks(n):
        diff = flat[None, :, :] - flat[s][:, None, :]
        norm = np.sqrt(np.einsum("abk,abk->ab", diff, diff))
        dt = times[None, :] - times[s][:, None]
        ok = dt > 0
        ratio = np.where(ok, norm / np.where(ok, dt, 1.0) ** exponent, 0.0)
        if weight_beta is not None and weight_beta != 0:
            ratio = ratio * ((times[s] - t_origin) ** weight_beta)[:, None]
        best = max(best, float(ratio.max()))
    return best


def holder_seminorm(values, grid: Grid, exponent: float, weight_beta: float | None = None,
                    two_parameter: bool = False) -> float:
    """Discrete Hölder seminorm over all grid pairs.

    Parameters
    ----------
    values : array_like
        Path values with the node axis first, or (``two_parameter=True``) an
        array ``X[s, t, ...]`` of two-parameter increments.
    grid : Grid
    exponent : float
        Hölder exponent in (0, 1].
    weight_beta : float, optional
        If given, each ratio is multiplied by ``(s - t0)^weight_beta``.
    two_parameter : bool
        Interpret ``values`` as a two-parameter array.
    """
    if not 0 < exponent <= 1:
        raise ValueError("exponent must lie in (0, 1]")
    x = np.asarray(values, dtype=float)
    if x.shape[0] < 2:
        raise ValueError("seminorm needs at least two nodes")
    times = grid.times
    if x.shape[0] != times.size:
        raise ValueError("values do not match the grid")
    if not two_parameter:
        return _increment_sup(x, times, exponent, weight_beta, grid.t0)
    n = times.size
    norm = np.sqrt((x.reshape(n, n, -1) ** 2).sum(axis=-1))
    dt = times[None, :] - times[:, None]
    ok = dt > 0
    ratio = np.where(ok, norm / np.where(ok, dt, 1.0) ** exponent, 0.0)
    if weight_beta:
        ratio = ratio * ((times - grid.t0) ** weight_beta)[:, None]
    return float(ratio.max())


def sup_norm(values) -> float:
    x = np.asarray(values, dtype=float)
    return float(np.sqrt((x.reshape(x.shape[0], -1) ** 2).sum(axis=1)).max())


def weighted_holder_norm(values, grid: Grid, beta: float) -> float:
    """``||y||_{beta,beta} = sup |y| + sup_{0<s<t} s^beta |y_t - y_s| / (t-s)^beta``."""
    return sup_norm(values) + holder_seminorm(values, grid, beta, weight_beta=beta)


def _area_pair_sup(rp: GridRoughPath, other: GridRoughPath | None, exponent: float) -> float:
    n = rp.grid.n_nodes
    times = rp.grid.times
    j = np.arange(n)
    best = 0.0
    for s in _pair_blocks(n, 64):
        a = rp.area(s[:, None], j[None, :])
        if other is not None:
            a = a - other.area(s[:, None], j[None, :])
        norm = np.sqrt((a**2).sum(axis=(-2, -1)))
        dt = times[None, :] - times[s][:, None]
        ok = dt > 0
        ratio = np.where(ok, norm / np.where(ok, dt, 1.0) ** exponent, 0.0)
        best = max(best, float(ratio.max()))
    return best


def path_norms(rp: GridRoughPath, alpha: float | None = None) -> tuple[float, float]:
    """``(|||w|||_alpha, ||w2||_{2 alpha})`` as grid sups."""
    a = rp.alpha if alpha is None else alpha
    return (
        _increment_sup(rp.values, rp.grid.times, a),
        _area_pair_sup(rp, None, 2 * a),
    )


def rough_metric(rp1: GridRoughPath, rp2: GridRoughPath, alpha: float | None = None) -> float:
    """Inhomogeneous rough-path distance on the finer of two aligned grids.

    The coarser lift is re-expressed on the finer grid, which is exact for
    piecewise-linear lifts.
    """
    a = rp1.alpha if alpha is None else alpha
    if alpha is None and rp1.alpha != rp2.alpha:
        raise ValueError("rough paths carry different alpha")
    if not rp1.grid.aligned_with(rp2.grid):
        raise ValueError("rough_metric needs aligned grids")
    if rp1.grid.n_cells < rp2.grid.n_cells:
        rp1 = rp1.refine(rp2.grid.n_cells // rp1.grid.n_cells)
    elif rp2.grid.n_cells < rp1.grid.n_cells:
        rp2 = rp2.refine(rp1.grid.n_cells // rp2.grid.n_cells)
    d1 = _increment_sup(rp1.values - rp2.values, rp1.grid.times, a)
    return d1 + _area_pair_sup(rp1, rp2, 2 * a)


def shift_rough_path(rp: GridRoughPath, tau: float, t_end: float | None = None) -> GridRoughPath:
    """Wiener shift ``w_{. + tau} - w_tau`` on ``[0, t_end - tau]`` (default: grid end).

    The shifted grid starts at ``0`` so that times are measured from the
    new origin.
    """
    g = rp.grid
    k = g.index(g.t0 + tau) if tau != 0 else 0
    m = g.n_cells if t_end is None else g.index(t_end)
    if m <= k:
        raise ValueError("shift leaves no cells")
    vals = rp.values[k : m + 1] - rp.values[k]
    new_grid = Grid(0.0, g.h * (m - k), m - k)
    return GridRoughPath(VPath(new_grid, vals), rp.area_adjacent[k:m], rp.alpha)


_HEADER = "# roughflow-path v1"


def save_rough_path(rp: GridRoughPath, path) -> None:
    """Write the columnar text format.

    Line 1 is ``# roughflow-path v1``; line 2 is ``level t0 t1 n_cells dim_V alpha``
    (``level`` is ``-1`` for non-dyadic grids).  Each following row holds ``t``,
    the ``dim_V`` path coordinates and the ``dim_V**2`` entries (row-major) of
    the area of the cell starting at ``t``; the last row pads the area with 0.
    """
    g = rp.grid
    d = rp.dim_V
    area = np.zeros((g.n_nodes, d * d))
    area[:-1] = rp.area_adjacent.reshape(g.n_cells, d * d)
    table = np.column_stack([g.times, rp.values, area])
    level = -1 if g.level is None else g.level
    head = f"{level} {g.t0!r} {g.t1!r} {g.n_cells} {d} {rp.alpha!r}"
    with open(path, "w") as fh:
        fh.write(_HEADER + "\n" + head + "\n")
        np.savetxt(fh, table, fmt="%.17g")


def load_rough_path(path) -> GridRoughPath:
    with open(path) as fh:
        first = fh.readline().strip()
        if first != _HEADER:
            raise ValueError(f"not a roughflow path file: {first!r}")
        level, t0, t1, n_cells, d, alpha = fh.readline().split()
        table = np.loadtxt(fh, ndmin=2)
    n_cells, d = int(n_cells), int(d)
    grid = Grid(float(t0), float(t1), n_cells)
    if table.shape != (n_cells + 1, 1 + d + d * d):
        raise ValueError("table shape does not match header")
    values = table[:, 1 : 1 + d]
    area = table[:-1, 1 + d :].reshape(n_cells, d, d)
    return GridRoughPath(VPath(grid, values), area, float(alpha))
