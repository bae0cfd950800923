"""Isotropic Matérn correlation functions and correlation-matrix assembly."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.spatial.distance import cdist, pdist, squareform


@dataclass(frozen=True)
class KernelSpec:
    """Matérn smoothness ``nu`` and lengthscale (input-coordinate units)."""

    nu: float
    lengthscale: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.nu) and self.nu > 0):
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not (np.isfinite(self.lengthscale) and self.lengthscale > 0):
            raise ValueError(f"lengthscale must be positive, got {self.lengthscale}")


def _matern_scaled(nu: float, u: np.ndarray) -> np.ndarray:
    """Matérn correlation as a function of the scaled lag u = sqrt(2 nu) h / theta."""
    out = np.ones_like(u)
    pos = u > 0
    if not pos.any():
        return out
    up = u[pos]
    # log-space keeps u**nu * K_nu(u) finite for large nu
    with np.errstate(divide="ignore", over="ignore"):
        log_k = np.log(special.kve(nu, up)) - up
        val = np.exp((1.0 - nu) * np.log(2.0) - special.gammaln(nu) + nu * np.log(up) + log_k)
    # K_nu overflows for tiny u when nu is large; the leading terms of the
    # small-argument expansion are exact to roundoff there
    bad = ~np.isfinite(val)
    if bad.any():
        ub = up[bad]
        if nu > 1:
            val[bad] = 1.0 - ub**2 / (4.0 * (nu - 1.0))
        else:
            val[bad] = 1.0
    out[pos] = np.minimum(val, 1.0)
    return out


def matern_correlation(spec: KernelSpec, lag):
    """Phi(lag) for scalar or array lags (lag >= 0)."""
    h = np.asarray(lag, dtype=float)
    if np.any(h < 0):
        raise ValueError("lag must be non-negative")
    u = np.sqrt(2.0 * spec.nu) * h / spec.lengthscale
    vals = _matern_scaled(spec.nu, np.atleast_1d(u).astype(float))
    if h.ndim == 0:
        return float(vals[0])
    return vals.reshape(h.shape)


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return x


def correlation_matrix(spec: KernelSpec, points) -> np.ndarray:
    """Dense correlation matrix R_jk = Phi(||x_j - x_k||); rejects duplicate points."""
    x = _as_points(points)
    n = x.shape[0]
    if n == 0:
        raise ValueError("empty point set")
    if n == 1:
        return np.ones((1, 1))
    d = pdist(x)
    if np.min(d) == 0.0:
        raise ValueError("duplicate points give a singular correlation matrix")
    # condensed form keeps the result bitwise symmetric with a unit diagonal
    return squareform(matern_correlation(spec, d), checks=False) + np.eye(n)


def cross_correlation(spec: KernelSpec, query, points) -> np.ndarray:
    """Vector a(x) with a_i = Phi(||x - x_i||) for a single query point."""
    x = _as_points(points)
    q = np.asarray(query, dtype=float).reshape(1, -1)
    if q.shape[1] != x.shape[1]:
        raise ValueError(f"query has dimension {q.shape[1]}, points have {x.shape[1]}")
    return matern_correlation(spec, cdist(q, x))[0]


def cross_correlation_batch(spec: KernelSpec, queries, points) -> np.ndarray:
    """Matrix with one row a(x)^T per query."""
    return matern_correlation(spec, cdist(_as_points(queries), _as_points(points)))
