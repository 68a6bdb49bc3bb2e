"""Semigroup convolutions of a piecewise-linear rough driver.

For a driver that is linear on every grid cell all four processes have exact
closed forms, assembled cell by cell from the kernels in
:class:`~roughflow.semigroup.CellKernels`.  Writing ``e_k(r) = exp(-lambda_k r)``
and letting sums run over the cells ``[u, v]`` inside ``[s, t]``:

``omega_S``
    ``int_s^t S(t-r) K dw_r``, i.e. ``sum_j K[k, j] J[k, j]`` with
    ``J[k, j] = sum e_k(t-v) phi1_k dw_j``.
``a``
    ``int_s^t S(t-r) E(S(r-s) x) dw_r``.
``c``
    ``int_s^t S(t-r) E(K (w_r - w_s)) dw_r``.
``b``
    ``int_s^t S(t-r) E(omega_S[r, s](K)) dw_r``.

Operators follow one convention throughout: ``K`` has shape ``(W, V)`` and
``E`` has shape ``(W, W, V)`` with ``E(x (x) v)_k = sum_{l,j} E[k, l, j] x_l v_j``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .rough_path import GridRoughPath, path_norms
from .semigroup import CellKernels, SpectralSemigroup, d_gamma_norm, hat_cumsum

__all__ = [
    "OperatorK",
    "OperatorE",
    "operator_norm",
    "ConvolutionTables",
    "tables_for",
    "omega_S",
    "a_process",
    "b_process",
    "c_process",
    "algebraic_defects",
    "estimate_sups",
]


def operator_norm(op) -> float:
    """Largest singular value of ``K`` (``W x V``) or ``E`` (``W x (W V)``)."""
    m = np.asarray(op, dtype=float)
    return float(np.linalg.norm(m.reshape(m.shape[0], -1), 2))


@dataclass(frozen=True, eq=False)
class OperatorK:
    """Linear map ``V -> W`` stored as a ``(dim_W, dim_V)`` matrix."""

    matrix: np.ndarray
    d_beta: float | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or not np.all(np.isfinite(m)):
            raise ValueError("K must be a finite (dim_W, dim_V) matrix")
        object.__setattr__(self, "matrix", m)

    def norm(self, sg: SpectralSemigroup | None = None) -> float:
        """``|K|_{L(V,W)}``, or ``|K|_{L(V,D_beta)}`` when flagged and ``sg`` given."""
        if self.d_beta is None or sg is None:
            return operator_norm(self.matrix)
        w = sg.power_weights(self.d_beta)[:, None]
        return operator_norm(self.matrix) + operator_norm(w * self.matrix)


@dataclass(frozen=True, eq=False)
class OperatorE:
    """Linear map ``W (x) V -> W`` stored as a ``(dim_W, dim_W, dim_V)`` tensor."""

    tensor: np.ndarray

    def __post_init__(self):
        e = np.array(self.tensor, dtype=float)
        if e.ndim != 3 or e.shape[0] != e.shape[1] or not np.all(np.isfinite(e)):
            raise ValueError("E must be a finite (dim_W, dim_W, dim_V) tensor")
        object.__setattr__(self, "tensor", e)

    def norm(self) -> float:
        return operator_norm(self.tensor)


def _arr(op) -> np.ndarray:
    if isinstance(op, OperatorK):
        return op.matrix
    if isinstance(op, OperatorE):
        return op.tensor
    return np.asarray(op, dtype=float)


_KERNELS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _kernels(sg: SpectralSemigroup, h: float) -> CellKernels:
    per_sg = _KERNELS.setdefault(sg, {})
    key = float(f"{h:.13e}")
    if key not in per_sg:
        per_sg[key] = CellKernels.build(sg, h)
    return per_sg[key]


class ConvolutionTables:
    """Cumulative tables for one (driver, semigroup) pair.

    Attributes
    ----------
    kern : CellKernels
    dw : ndarray, shape (n_cells, V)
    jcum : ndarray, shape (n_nodes, W, V)
        ``jcum[i] = J(t_0, t_i)``, so ``J(s, t) = jcum[t] - S(t-s) jcum[s]``.
    """

    def __init__(self, rp: GridRoughPath, sg: SpectralSemigroup):
        self.rp = rp
        self.sg = sg
        self.grid = rp.grid
        self.h = rp.grid.h
        self.lam = sg.eigenvalues
        self.kern = _kernels(sg, self.h)
        self.dw = rp.increments
        self.w = rp.values
        cells = self.kern.phi1[None, :, None] * self.dw[:, None, :]
        self.jcum = hat_cumsum(cells, self.kern.decay)

    @property
    def dim_W(self) -> int:
        return self.lam.size

    @property
    def dim_V(self) -> int:
        return self.dw.shape[1]

    def decay(self, steps) -> np.ndarray:
        """``exp(-lambda h steps)`` with the mode axis last."""
        steps = np.asarray(steps, dtype=float)
        return np.exp(-np.multiply.outer(steps * self.h, self.lam))

    def J(self, i, j) -> np.ndarray:
        """``J(t_i, t_j)``, shape ``(..., W, V)``."""
        i = np.asarray(i)
        j = np.asarray(j)
        return self.jcum[j] - self.decay(j - i)[..., None] * self.jcum[i]

    def omega_S(self, K, i, j) -> np.ndarray:
        return np.einsum("...kj,...kj->...k", _arr(K), self.J(i, j))

    def _check(self, i: int, j: int) -> None:
        if not 0 <= i <= j <= self.grid.n_cells:
            raise ValueError(f"invalid node pair ({i}, {j})")

    def a_tensor(self, i: int, j: int) -> np.ndarray:
        """``A[k, l, j]`` with ``a(E, x)_k = sum E[k,l,j] x_l A[k,l,j]``."""
        self._check(i, j)
        c = np.arange(i, j)
        left = self.decay(j - c - 1)          # e_k(t - v)
        right = self.decay(c - i)             # e_l(u - s)
        return np.einsum("ck,cl,kl,cj->klj", left, right, self.kern.mixed, self.dw[i:j])

    def c_tensor(self, i: int, j: int) -> np.ndarray:
        """``C[k, a, j]`` with ``c(E, K)_k = sum E[k,l,j] K[l,a] C[k,a,j]``."""
        self._check(i, j)
        c = np.arange(i, j)
        left = self.decay(j - c - 1)
        dw = self.dw[i:j]
        base = self.w[i:j] - self.w[i]
        out = np.einsum("ck,k,ca,cj->kaj", left, self.kern.phi1, base, dw)
        out += np.einsum("ck,k,ca,cj->kaj", left, self.kern.ramp, dw, dw)
        return out

    def b_tensor(self, i: int, j: int) -> np.ndarray:
        """``B[k, l, a, j]`` with ``b(E, K)_k = sum E[k,l,j] K[l,a] B[k,l,a,j]``."""
        self._check(i, j)
        c = np.arange(i, j)
        left = self.decay(j - c - 1)
        dw = self.dw[i:j]
        jsu = self.J(i, c)                    # (cells, W, V): J(s, u)
        out = np.einsum("ck,kl,cla,cj->klaj", left, self.kern.mixed, jsu, dw)
        out += np.einsum("ck,kl,ca,cj->klaj", left, self.kern.iterated, dw, dw)
        return out

    def a(self, E, x, i: int, j: int) -> np.ndarray:
        return np.einsum("klj,l,klj->k", _arr(E), np.asarray(x, float), self.a_tensor(i, j))

    def c(self, E, K, i: int, j: int) -> np.ndarray:
        return np.einsum("klj,la,kaj->k", _arr(E), _arr(K), self.c_tensor(i, j))

    def b(self, E, K, i: int, j: int) -> np.ndarray:
        return np.einsum("klj,la,klaj->k", _arr(E), _arr(K), self.b_tensor(i, j))


_CACHE: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def tables_for(rp: GridRoughPath, sg: SpectralSemigroup) -> ConvolutionTables:
    """Cached :class:`ConvolutionTables` for ``(rp, sg)``."""
    inner = _CACHE.setdefault(rp, weakref.WeakKeyDictionary())
    tab = inner.get(sg)
    if tab is None:
        tab = ConvolutionTables(rp, sg)
        inner[sg] = tab
    return tab


def _nodes(rp: GridRoughPath, s: float, t: float) -> tuple[int, int]:
    i, j = rp.grid.index(s), rp.grid.index(t)
    if i > j:
        raise ValueError("need s <= t")
    return i, j


def omega_S(rp: GridRoughPath, sg: SpectralSemigroup, K, s: float, t: float) -> np.ndarray:
    """``int_s^t S(t-r) K dw_r`` for the piecewise-linear driver.

    Examples
    --------
    >>> from roughflow.rough_path import Grid, VPath, lift_piecewise_linear
    >>> from roughflow.semigroup import explicit
    >>> g = Grid.dyadic(0.0, 1.0, 0)
    >>> rp = lift_piecewise_linear(VPath(g, [[0.0], [1.0]]))
    >>> float(omega_S(rp, explicit([1.0]), [[1.0]], 0.0, 1.0)[0])  # 1 - e^{-1}
    0.6321205588285578
    """
    i, j = _nodes(rp, s, t)
    return tables_for(rp, sg).omega_S(K, i, j)


def a_process(rp, sg, E, x, s: float, t: float) -> np.ndarray:
    """``a[t, s](E, x) = int_s^t S(t-r) E(S(r-s) x) dw_r``."""
    i, j = _nodes(rp, s, t)
    return tables_for(rp, sg).a(E, x, i, j)


def c_process(rp, sg, E, K, s: float, t: float) -> np.ndarray:
    """``c[t, s](E, K) = int_s^t S(t-r) E(K (w_r - w_s)) dw_r``."""
    i, j = _nodes(rp, s, t)
    return tables_for(rp, sg).c(E, K, i, j)


def _b_germ(tab: ConvolutionTables, E, K, s_idx: int):
    """Germ ``omega_S[v,u](E omega_S[u,s](K)) + c[v,u](E, K)`` anchored at ``s``."""
    E = _arr(E)
    K = _arr(K)

    def ev(u: int, v: int) -> np.ndarray:
        inner = tab.omega_S(K, s_idx, u)
        return tab.omega_S(np.einsum("klj,l->kj", E, inner), u, v) + tab.c(E, K, u, v)

    return ev


def b_process(rp, sg, E, K, s: float, t: float, level: int | None = None) -> np.ndarray:
    """``b[t, s](E, K) = int_s^t S(t-r) E(omega_S[r, s](K)) dw_r``.

    With ``level=None`` the exact cell-wise form is used.  With an integer
    ``level`` the value is the dyadic compensated Riemann sum of order
    ``level`` for the germ ``omega_S[v,u](E omega_S[u,s](K)) + c[v,u](E, K)``;
    the driver is refined (exactly, being piecewise linear) when ``[s, t]``
    holds fewer than ``2**level`` cells.
    """
    i, j = _nodes(rp, s, t)
    if level is None:
        return tables_for(rp, sg).b(E, K, i, j)
    if i == j:
        return np.zeros(sg.dim_W)
    cells = j - i
    factor = 1
    while (cells * factor) % (2**level):
        factor *= 2
    sub = rp.restrict(i, j)
    if factor > 1:
        sub = sub.refine(factor)
    tab = tables_for(sub, sg)
    germ = _b_germ(tab, E, K, 0)
    m = sub.grid.n_cells
    step = m // 2**level
    total = np.zeros(sg.dim_W)
    for u in range(0, m, step):
        v = u + step
        total = total + tab.decay(m - v) * germ(u, v)
    return total


def algebraic_defects(rp, sg, E, K, x, s: float, tau: float, t: float) -> dict:
    """Residuals of the four twisted-additivity identities at ``s <= tau <= t``.

    Returned keys: ``omega_S`` (should vanish), ``a`` (against
    ``a[t,tau](E, (S(tau-s) - Id) x)``), ``c`` (against
    ``omega_S[t,tau](E K (w_tau - w_s))``) and ``b`` (against
    ``a[t,tau](E, omega_S[tau,s](K))``).
    """
    tab = tables_for(rp, sg)
    i, m, j = rp.grid.index(s), rp.grid.index(tau), rp.grid.index(t)
    if not i <= m <= j:
        raise ValueError("need s <= tau <= t")
    E = _arr(E)
    K = _arr(K)
    x = np.asarray(x, dtype=float)
    S_tm = tab.decay(j - m)
    S_ms = tab.decay(m - i)

    def d2(f):
        return f(i, j) - f(m, j) - S_tm * f(i, m)

    om = d2(lambda p, q: tab.omega_S(K, p, q))
    a = d2(lambda p, q: tab.a(E, x, p, q)) - tab.a(E, (S_ms - 1.0) * x, m, j)
    ek = np.einsum("klj,la->kaj", E, K)
    c = d2(lambda p, q: tab.c(E, K, p, q)) - tab.omega_S(
        np.einsum("kaj,a->kj", ek, tab.w[m] - tab.w[i]), m, j
    )
    b = d2(lambda p, q: tab.b(E, K, p, q)) - tab.a(E, tab.omega_S(K, i, m), m, j)
    return {name: float(np.abs(v).max()) for name, v in
            (("omega_S", om), ("a", a), ("c", c), ("b", b))}


def estimate_sups(rp, sg, K, E, x, gamma: float = 1.0, stride: int = 1) -> dict:
    """Empirical constants of the analytic bounds for the supporting processes.

    Each entry is a grid sup of ``|process| / (norms * (t-s)^exponent)``:

    - ``omega_S``: exponent ``alpha``, norms ``|||w|||_alpha |K|``
    - ``a_minus_omega``: ``|a(E,x) - omega_S(E x)|``, exponent ``alpha + gamma``,
      norms ``|||w|||_alpha |E| |x|_{D_gamma}``
    - ``b``: exponent ``2 alpha``, norms ``(|||w|||_alpha^2 + ||w2||_{2 alpha}) |E| |K|``
    """
    tab = tables_for(rp, sg)
    alpha = rp.alpha
    wn, an = path_norms(rp)
    K = _arr(K)
    E = _arr(E)
    nk, ne = operator_norm(K), operator_norm(E)
    nx = float(d_gamma_norm(sg, gamma, x))
    n = rp.grid.n_cells
    idx = range(0, n + 1, stride)
    best = {"omega_S": 0.0, "a_minus_omega": 0.0, "b": 0.0}
    ex = np.einsum("klj,l->kj", E, np.asarray(x, float))
    for i in idx:
        for j in idx:
            if j <= i:
                continue
            dt = (j - i) * tab.h
            om = np.linalg.norm(tab.omega_S(K, i, j))
            best["omega_S"] = max(best["omega_S"], om / (wn * nk * dt**alpha + 1e-300))
            am = np.linalg.norm(tab.a(E, x, i, j) - tab.omega_S(ex, i, j))
            best["a_minus_omega"] = max(
                best["a_minus_omega"], am / (wn * ne * nx * dt ** (alpha + gamma) + 1e-300)
            )
            bb = np.linalg.norm(tab.b(E, K, i, j))
            best["b"] = max(best["b"], bb / ((wn**2 + an) * ne * nk * dt ** (2 * alpha) + 1e-300))
    return best
