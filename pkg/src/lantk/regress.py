"""Kernel least squares: fit dual coefficients, predict, score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class NotPositiveDefinite(np.linalg.LinAlgError):
    pass


@dataclass
class KernelRegressor:
    alpha: np.ndarray  # (n,) or (n, C)
    ridge: float
    multiclass: bool
    provenance: dict


def default_ridge(K) -> float:
    K = np.asarray(K, float)
    return 1e-6 * float(np.trace(K)) / K.shape[0]


def one_hot(labels, C: int) -> np.ndarray:
    labels = np.asarray(labels, int)
    T = np.zeros((len(labels), C))
    T[np.arange(len(labels)), labels] = 1.0
    return T


def fit(K_train, targets, ridge: float | None = None, indefinite: bool = False,
        provenance: dict | None = None) -> KernelRegressor:
    """Solve (K + ridge I) alpha = targets.

    By default K + ridge I must be positive definite (Cholesky). Label-aware
    kernels that add an estimated label-product matrix need not be PSD; pass
    ``indefinite=True`` to use a symmetric indefinite (LDL^T-based) solve,
    which only fails for a singular system.
    """
    K = np.asarray(K_train, float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"training kernel must be square, got {K.shape}")
    scale = max(np.abs(K).max(), 1.0)
    if np.abs(K - K.T).max() > 1e-8 * scale:
        raise ValueError("training kernel is not symmetric")
    T = np.asarray(targets, float)
    if T.shape[0] != K.shape[0]:
        raise ValueError(f"{T.shape[0]} targets for a {K.shape[0]}x{K.shape[0]} kernel")
    ridge = default_ridge(K) if ridge is None else float(ridge)
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    A = 0.5 * (K + K.T) + ridge * np.eye(K.shape[0])
    if indefinite:
        try:
            with np.errstate(all="raise"):
                alpha = sla.solve(A, T, assume_a="sym")
        except (sla.LinAlgError, FloatingPointError) as e:
            raise NotPositiveDefinite(f"singular system ({e}); increase the ridge") from None
    else:
        try:
            c = sla.cho_factor(A, lower=True)
        except sla.LinAlgError:
            raise NotPositiveDefinite(
                f"K + {ridge:.3g} I is not positive definite; increase the ridge") from None
        alpha = sla.cho_solve(c, T)
        # a rank-deficient K with ridge 0 can pass Cholesky with a tiny pivot
        if ridge == 0 and np.min(np.abs(np.diag(c[0]))) < 1e-7 * np.sqrt(scale):
            raise NotPositiveDefinite("K is numerically rank deficient; use ridge > 0")
    return KernelRegressor(alpha, ridge, T.ndim == 2, provenance or {})


def predict(model: KernelRegressor, K_cross) -> np.ndarray:
    """Raw scores K_cross @ alpha."""
    Kc = np.atleast_2d(np.asarray(K_cross, float))
    if Kc.shape[1] != model.alpha.shape[0]:
        raise ValueError(f"cross kernel has {Kc.shape[1]} columns, model has {model.alpha.shape[0]} training points")
    return Kc @ model.alpha


def decide(scores) -> np.ndarray:
    """Binary: sign with 0 -> +1. Multi-class: argmax with lowest-index ties."""
    s = np.asarray(scores, float)
    if s.ndim == 2:
        return np.argmax(s, axis=1)
    return np.where(s >= 0, 1.0, -1.0)


def accuracy(preds, labels) -> float:
    preds, labels = np.asarray(preds), np.asarray(labels)
    if preds.shape != labels.shape:
        raise ValueError(f"length mismatch {preds.shape} vs {labels.shape}")
    return float(np.mean(preds == labels))
