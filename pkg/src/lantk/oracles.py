"""Slow independent references used by the self-test and the test suite."""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.linalg import expm

from .net2 import empirical_k2, init_net


def hierarchy_by_quadrature(K2_0: float, K3_0_vec, K4_0_block, H, y, t: float, tol: float = 1e-11) -> float:
    """Integrate the truncated kernel ODEs by nested adaptive quadrature.

    Residuals follow the linearized flow r_v = -exp(-vH/n) y (zero initial output);
    K3_u = K3_0 - (1/n) int_0^u K4 r_v dv and K2_t = K2_0 - (1/n) int_0^t K3_u . r_u du.
    Matrix exponentials come from scipy's Pade routine, independent of any eigendecomposition.
    """
    H = np.asarray(H, float)
    y = np.asarray(y, float)
    K3 = np.asarray(K3_0_vec, float)
    B = np.asarray(K4_0_block, float)
    n = len(y)

    def r(v):
        return -expm(-v * H / n) @ y

    def k3(u):
        if u == 0:
            return K3
        inner, _ = quad_vec(r, 0.0, u, epsabs=tol, epsrel=tol)
        return K3 - B @ inner / n

    val, _ = quad(lambda u: float(k3(u) @ r(u)), 0.0, t, epsabs=tol, epsrel=tol, limit=200)
    return float(K2_0 - val / n)


def mc_mean_k2(X, inits: int, width: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error of the empirical ReLU K2 over independent initializations."""
    X = np.atleast_2d(X)
    draws = np.stack([empirical_k2(init_net(X.shape[1], width, "relu", seed=seed + k), X) for k in range(inits)])
    return draws.mean(axis=0), draws.std(axis=0, ddof=1) / np.sqrt(inits)
