"""Diffusion and drift coefficients on the spectral space.

``G(y)`` is a ``(dim_W, dim_V)`` matrix and its derivatives follow the layout
``DG(y)[k, l, j] = dG[k, j] / dy_l``, ``D2G(y)[k, l, m, j]`` and so on, so
that ``DG(y)`` is directly an ``E`` argument of the convolution processes.
All evaluators accept a leading batch axis on ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .semigroup import SpectralSemigroup

__all__ = [
    "CoefficientG",
    "CoefficientF",
    "zero_G",
    "constant_G",
    "linear_G",
    "nemytskii_G",
    "zero_F",
    "linear_F",
    "tanh_F",
    "g_from_config",
    "f_from_config",
    "smoothing_weights",
]


@dataclass(frozen=True, eq=False)
class CoefficientG:
    """Diffusion coefficient with up to three derivatives.

    Parameters
    ----------
    eval, d1, d2, d3 : callable
        Map ``y`` of shape ``(..., W)`` to arrays of shape ``(..., W, V)``,
        ``(..., W, W, V)``, ``(..., W, W, W, V)`` and ``(..., W, W, W, W, V)``.
    dim_W, dim_V : int
    name : str
    bounded : bool
        Whether the family is globally bounded with bounded derivatives.
    is_zero, is_constant : bool
        Structural flags used to skip work.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    d3: Callable[[np.ndarray], np.ndarray]
    dim_W: int
    dim_V: int
    name: str = "custom"
    bounded: bool = True
    is_zero: bool = False
    is_constant: bool = False

    def bounds(self, radius: float = 1.0, n_samples: int = 64, seed: int = 0) -> dict:
        """Sampled sups of ``|G|, |DG|, |D2G|, |D3G|`` over the ball of ``radius``.

        Norms are Frobenius norms, which dominate the operator norms.
        """
        rng = np.random.default_rng(seed)
        y = rng.standard_normal((n_samples, self.dim_W))
        y *= radius * rng.uniform(0, 1, (n_samples, 1)) / np.linalg.norm(y, axis=1, keepdims=True)
        y = np.vstack([np.zeros(self.dim_W), y])
        out = {}
        for key, fn in (("G", self.eval), ("DG", self.d1), ("D2G", self.d2), ("D3G", self.d3)):
            v = fn(y)
            out[key] = float(np.sqrt((v.reshape(v.shape[0], -1) ** 2).sum(axis=1)).max())
        return out

    def bound(self, radius: float = 1.0) -> float:
        return max(self.bounds(radius).values())


@dataclass(frozen=True, eq=False)
class CoefficientF:
    """Drift ``F: W -> W`` with a declared Lipschitz constant."""

    eval: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    dim_W: int
    name: str = "custom"
    is_zero: bool = False

    def lipschitz_ratio(self, n_samples: int = 200, seed: int = 0, radius: float = 3.0) -> float:
        """Largest sampled ``|F(x) - F(y)| / |x - y|``."""
        rng = np.random.default_rng(seed)
        x = radius * rng.standard_normal((n_samples, self.dim_W))
        y = radius * rng.standard_normal((n_samples, self.dim_W))
        num = np.linalg.norm(self.eval(x) - self.eval(y), axis=1)
        den = np.linalg.norm(x - y, axis=1)
        return float((num / den).max())


def smoothing_weights(sg: SpectralSemigroup, beta: float) -> np.ndarray:
    """``(-A)^{-beta}`` multipliers; modes in the kernel of ``A`` get weight 1."""
    lam = sg.eigenvalues
    return np.where(lam > 0, np.power(np.where(lam > 0, lam, 1.0), -beta), 1.0)


def _zeros(shape_tail):
    return lambda y: np.zeros(np.shape(y)[:-1] + shape_tail)


def zero_G(dim_W: int, dim_V: int) -> CoefficientG:
    W, V = dim_W, dim_V
    return CoefficientG(_zeros((W, V)), _zeros((W, W, V)), _zeros((W, W, W, V)),
                        _zeros((W, W, W, W, V)), W, V, "zero", True, True, True)


def constant_G(K) -> CoefficientG:
    """``G(y) = K`` for a fixed ``(W, V)`` matrix."""
    K = np.array(K, dtype=float)
    if K.ndim != 2:
        raise ValueError("K must be a (dim_W, dim_V) matrix")
    W, V = K.shape

    def ev(y):
        return np.broadcast_to(K, np.shape(y)[:-1] + (W, V)).copy()

    return CoefficientG(ev, _zeros((W, W, V)), _zeros((W, W, W, V)), _zeros((W, W, W, W, V)),
                        W, V, "constant", True, False, True)


def _diag_family(weights, P, B, g, dg, d2g, d3g, name, bounded) -> CoefficientG:
    """``G(y)[k, j] = weights_k g((P y)_k) B[k, j]``."""
    P = np.asarray(P, dtype=float)
    B = np.asarray(B, dtype=float)
    w = np.asarray(weights, dtype=float)
    W, V = B.shape
    if P.shape != (W, W):
        raise ValueError("P must be (dim_W, dim_W)")
    wB = w[:, None] * B

    def py(y):
        return np.asarray(y, dtype=float) @ P.T

    def ev(y):
        return g(py(y))[..., :, None] * wB

    def d1(y):
        return np.einsum("...k,kl,kj->...klj", dg(py(y)), P, wB)

    def d2(y):
        return np.einsum("...k,kl,km,kj->...klmj", d2g(py(y)), P, P, wB)

    def d3(y):
        return np.einsum("...k,kl,km,kn,kj->...klmnj", d3g(py(y)), P, P, P, wB)

    return CoefficientG(ev, d1, d2, d3, W, V, name, bounded)


def linear_G(sg: SpectralSemigroup, beta: float, P, B) -> CoefficientG:
    """``G(y) = (-A)^{-beta} diag(P y) B``; smooth but unbounded."""
    one = np.ones_like
    zero = np.zeros_like
    return _diag_family(smoothing_weights(sg, beta), P, B, lambda x: x, one, zero, zero,
                        "linear", False)


def nemytskii_G(sg: SpectralSemigroup, beta: float, P, B, offset: float = 0.5) -> CoefficientG:
    """``G(y) = (-A)^{-beta} diag(tanh(P y) + offset) B``.

    Bounded with bounded derivatives of every order, and mapping into the
    domain of ``(-A)^beta``.
    """

    def g(x):
        return np.tanh(x) + offset

    def dg(x):
        return 1.0 - np.tanh(x) ** 2

    def d2g(x):
        th = np.tanh(x)
        return -2.0 * th * (1.0 - th**2)

    def d3g(x):
        th = np.tanh(x)
        return -2.0 * (1.0 - th**2) * (1.0 - 3.0 * th**2)

    return _diag_family(smoothing_weights(sg, beta), P, B, g, dg, d2g, d3g, "nemytskii", True)


def zero_F(dim_W: int) -> CoefficientF:
    return CoefficientF(lambda y: np.zeros(np.shape(y)), 0.0, dim_W, "zero", True)


def linear_F(M) -> CoefficientF:
    M = np.array(M, dtype=float)
    return CoefficientF(lambda y: np.asarray(y, float) @ M.T, float(np.linalg.norm(M, 2)),
                        M.shape[0], "linear")


def tanh_F(M, scale: float = 1.0) -> CoefficientF:
    """``F(y) = scale * tanh(M y)``, Lipschitz with constant ``scale |M|``."""
    M = np.array(M, dtype=float)
    return CoefficientF(lambda y: scale * np.tanh(np.asarray(y, float) @ M.T),
                        float(abs(scale) * np.linalg.norm(M, 2)), M.shape[0], "tanh")


def _matrix(cfg, shape, rng, default_scale):
    if cfg is None:
        return default_scale * rng.standard_normal(shape) / np.sqrt(shape[1])
    m = np.array(cfg, dtype=float)
    if m.shape != shape:
        raise ValueError(f"matrix has shape {m.shape}, expected {shape}")
    return m


def g_from_config(cfg: dict, sg: SpectralSemigroup, dim_V: int, beta: float) -> CoefficientG:
    """Build ``G`` from a config mapping.

    Keys: ``family`` (``zero``, ``constant``, ``linear``, ``nemytskii``),
    optional ``K``/``P``/``B`` matrices, ``scale`` (default 1), ``offset``
    and ``seed`` for randomly drawn matrices.
    """
    cfg = dict(cfg or {"family": "zero"})
    fam = cfg.get("family", "zero")
    W = sg.dim_W
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    scale = float(cfg.get("scale", 1.0))
    if fam == "zero":
        return zero_G(W, dim_V)
    if fam == "constant":
        K = _matrix(cfg.get("K"), (W, dim_V), rng, 1.0)
        return constant_G(scale * smoothing_weights(sg, beta)[:, None] * K
                          if cfg.get("K") is None else scale * K)
    P = _matrix(cfg.get("P"), (W, W), rng, 1.0)
    B = scale * _matrix(cfg.get("B"), (W, dim_V), rng, 1.0)
    if fam == "linear":
        return linear_G(sg, beta, P, B)
    if fam == "nemytskii":
        return nemytskii_G(sg, beta, P, B, float(cfg.get("offset", 0.5)))
    raise ValueError(f"unknown G family {fam!r}")


def f_from_config(cfg: dict | None, dim_W: int) -> CoefficientF:
    cfg = dict(cfg or {"family": "zero"})
    fam = cfg.get("family", "zero")
    if fam == "zero":
        return zero_F(dim_W)
    rng = np.random.default_rng(int(cfg.get("seed", 1)))
    M = _matrix(cfg.get("M"), (dim_W, dim_W), rng, 1.0)
    if fam == "linear":
        return linear_F(M)
    if fam == "tanh":
        return tanh_F(M, float(cfg.get("scale", 1.0)))
    raise ValueError(f"unknown F family {fam!r}")
