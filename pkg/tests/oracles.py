"""Independent reference computations used by the tests.

Nothing here calls the closed-form cell kernels of the package.  The
convolution integrals are evaluated by Gauss-Legendre quadrature on every
driver cell (the driver is piecewise linear, so ``dw = w' dr`` cellwise),
areas by direct summation, and ODEs by classical RK4.
"""

from __future__ import annotations

import numpy as np

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def cell_rule(times, i: int, j: int):
    """Gauss-Legendre nodes and weights on every cell of ``[times[i], times[j]]``.

    Returns ``r`` and ``wts`` of shape ``(cells, 12)`` and the cell indices.
    """
    a = np.asarray(times[i:j], dtype=float)
    b = np.asarray(times[i + 1:j + 1], dtype=float)
    half = 0.5 * (b - a)
    r = 0.5 * (a + b)[:, None] + half[:, None] * _GL_X[None, :]
    return r, half[:, None] * _GL_W[None, :], np.arange(i, j)


def slopes(times, values) -> np.ndarray:
    """Cellwise derivative of the piecewise-linear path, shape ``(cells, V)``."""
    return np.diff(values, axis=0) / np.diff(times)[:, None]


def interp(times, values, r) -> np.ndarray:
    """Linear interpolation of the path at the points ``r`` (any shape)."""
    flat = np.ravel(r)
    out = np.stack([np.interp(flat, times, values[:, k]) for k in range(values.shape[1])], axis=-1)
    return out.reshape(np.shape(r) + (values.shape[1],))


def omega_S(times, values, lam, K, i: int, j: int) -> np.ndarray:
    """``int_{t_i}^{t_j} exp(-lam (t_j - r)) K dw_r``."""
    if i == j:
        return np.zeros(len(lam))
    t = times[j]
    r, wts, cells = cell_rule(times, i, j)
    dw = slopes(times, values)[cells]                    # (c, V)
    ker = np.exp(-np.multiply.outer(t - r, lam))          # (c, n, W)
    kd = dw @ np.asarray(K).T                             # (c, W)
    return np.einsum("cn,cnk,ck->k", wts, ker, kd)


def omega_S_at(times, values, lam, K, i: int, r: np.ndarray) -> np.ndarray:
    """``int_{t_i}^{r} exp(-lam (r - u)) K dw_u`` for an array of end points ``r``, by quadrature."""
    times = np.asarray(times, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(np.shape(r) + (len(lam),))
    dwK = slopes(times, values) @ np.asarray(K).T
    for idx, rr in np.ndenumerate(np.asarray(r)):
        c_end = int(np.searchsorted(times, rr, side="right")) - 1
        c_end = min(c_end, len(times) - 2)
        acc = np.zeros(len(lam))
        for c in range(i, c_end + 1):
            a, b = times[c], min(times[c + 1], rr)
            if b <= a:
                continue
            half = 0.5 * (b - a)
            u = 0.5 * (a + b) + half * _GL_X
            acc += (half * _GL_W) @ np.exp(-np.multiply.outer(rr - u, lam)) * dwK[c]
        out[idx] = acc
    return out


def a_proc(times, values, lam, E, x, i: int, j: int) -> np.ndarray:
    """``int S(t - r) E(S(r - s) x) dw_r`` over ``[t_i, t_j]``."""
    s, t = times[i], times[j]
    r, wts, cells = cell_rule(times, i, j)
    dw = slopes(times, values)[cells]
    inner = np.asarray(x)[None, None, :] * np.exp(-np.multiply.outer(r - s, lam))  # (c, n, W)
    outer = np.exp(-np.multiply.outer(t - r, lam))
    val = np.einsum("klj,cnl,cj->cnk", E, inner, dw)
    return np.einsum("cn,cnk,cnk->k", wts, outer, val)


def c_proc(times, values, lam, E, K, i: int, j: int) -> np.ndarray:
    """``int S(t - r) E(K (w_r - w_s)) dw_r`` over ``[t_i, t_j]``."""
    t = times[j]
    r, wts, cells = cell_rule(times, i, j)
    dw = slopes(times, values)[cells]
    inc = interp(times, values, r) - values[i]              # (c, n, V)
    inner = inc @ np.asarray(K).T                           # (c, n, W)
    outer = np.exp(-np.multiply.outer(t - r, lam))
    val = np.einsum("klj,cnl,cj->cnk", E, inner, dw)
    return np.einsum("cn,cnk,cnk->k", wts, outer, val)


def b_proc(times, values, lam, E, K, i: int, j: int) -> np.ndarray:
    """``int S(t - r) E(omega_S[r, s](K)) dw_r`` with the inner integral also by quadrature."""
    t = times[j]
    r, wts, cells = cell_rule(times, i, j)
    dw = slopes(times, values)[cells]
    inner = omega_S_at(times, values, lam, K, i, r)        # (c, n, W)
    outer = np.exp(-np.multiply.outer(t - r, lam))
    val = np.einsum("klj,cnl,cj->cnk", E, inner, dw)
    return np.einsum("cn,cnk,cnk->k", wts, outer, val)


def area_direct(values, i: int, j: int) -> np.ndarray:
    """``int_{t_i}^{t_j} (w_r - w_{t_i}) (x) dw_r`` for the linear interpolation, by direct summation."""
    V = values.shape[1]
    acc = np.zeros((V, V))
    for k in range(i, j):
        d = values[k + 1] - values[k]
        acc += np.outer(values[k] - values[i], d) + 0.5 * np.outer(d, d)
    return acc


def fbm_cov(H: float, s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    return 0.5 * (np.abs(s) ** (2 * H) + np.abs(t) ** (2 * H) - np.abs(t - s) ** (2 * H))


def rk4(rhs, y0, t0: float, t1: float, n_steps: int, record_every: int = 1):
    """Classical RK4 for ``y' = rhs(t, y)``; returns sample times and states."""
    h = (t1 - t0) / n_steps
    y = np.array(y0, dtype=float)
    ts, ys = [t0], [y.copy()]
    t = t0
    for k in range(1, n_steps + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + k * h
        if k % record_every == 0:
            ts.append(t)
            ys.append(y.copy())
    return np.array(ts), np.array(ys)


def galerkin_rhs(lam, G, wdot, F=None):
    """Right-hand side ``-lam y + G(y) w'(t) + F(y)`` of the mode-truncated equation."""
    lam = np.asarray(lam, dtype=float)

    def rhs(t, y):
        out = -lam * y + G.eval(y) @ wdot(t)
        if F is not None:
            out = out + F.eval(y)
        return out

    return rhs
