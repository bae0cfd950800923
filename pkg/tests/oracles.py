"""Independent reference computations used across the test suite."""
import itertools
import math

import numpy as np
from scipy.spatial.distance import cdist

from mlgp.kernel import matern_correlation


def joint_conditional_mean(spec, lambda_sq, sigma_sq, levels_pts, levels_vals, query):
    """E[y_K(query) | y_i(X_i) for every i] from the stacked joint covariance.

    Cov(y_i(s), y_j(t)) = sum_{l <= min(i,j)} lambda^(2l) sigma^2 Phi(|s - t|).
    """
    K = len(levels_pts) - 1
    blocks_pts = [np.atleast_2d(np.asarray(x, float).reshape(len(x), -1)) for x in levels_pts]
    lvl = np.concatenate([[i] * len(x) for i, x in enumerate(blocks_pts)])
    P = np.vstack(blocks_pts)
    Y = np.concatenate([np.asarray(v, float) for v in levels_vals])
    cum = lambda i, j: sigma_sq * sum(lambda_sq**l for l in range(min(i, j) + 1))
    w = np.array([[cum(i, j) for j in lvl] for i in lvl])
    C = w * matern_correlation(spec, cdist(P, P))
    q = np.atleast_2d(np.asarray(query, float)).reshape(-1, P.shape[1])
    wq = np.array([cum(K, j) for j in lvl])
    c = wq[None, :] * matern_correlation(spec, cdist(q, P))
    return c @ np.linalg.solve(C, Y)


def enumerate_reallocations(base, residual, costs, monotone):
    """Every structure base + x with x >= 0 and sum x_i C_i <= residual."""
    K = len(base) - 1
    ranges = [range(int(residual // c) + 1) for c in costs]
    for add in itertools.product(*ranges):
        spend = sum(a * c for a, c in zip(add, costs))
        if spend > residual + 1e-9:
            continue
        n = [b + a for b, a in zip(base, add)]
        if monotone and any(n[i] > n[i - 1] for i in range(1, K + 1)):
            continue
        yield tuple(n)


def G(counts, base, lambda_sq, sigma_sq, rate):
    g = 0.0
    for i, (n, b) in enumerate(zip(counts, base)):
        if n == b:
            continue
        if n == 0:
            return math.inf
        tb = math.inf if b == 0 else b ** (-rate)
        g += lambda_sq**i * sigma_sq * (n ** (-rate) - tb)
    return g
