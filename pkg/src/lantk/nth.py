"""Kernels obtained by integrating the truncated tangent hierarchy along the kernel flow.

With training kernel H (n x n), labels y and zero initial output, the kernel
flow h_t = (I - exp(-tH/n)) y drives K3 and K4 corrections to the probe
kernel K2(x, x'). Integrating them exactly gives

    K2_0 + <K3, H^-1 (I - e^{-tH/n}) y>
         + y^T H^-1 (I - e^{-tH/n}) B H^-1 y - y^T P Q(t) P^T y,
    Q_ij = (1 - e^{-t(D_i + D_j)/n}) (P^T B P D^-1)_ij / (D_i + D_j),

where B_ij = K4(x, x', x_i, x_j) and H = P D P^T. Sending t to infinity with
expected kernels (the K3 term vanishes in expectation) gives the label-aware
kernel returned by :func:`lantk_nth`.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .kernels_analytic import MCConfig, expected_k2, expected_k2_matrix, expected_k4_block


class NotPositiveDefinite(ValueError):
    pass


class GuardrailError(ValueError):
    pass


@dataclass(frozen=True)
class EigenKernel:
    P: np.ndarray
    D: np.ndarray  # descending
    floor: float
    floored: int = 0

    def inv_apply(self, v):
        return self.P @ ((self.P.T @ v) / self.D)


def _check_sym(H, tol=1e-8):
    H = np.asarray(H, float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"kernel must be square, got {H.shape}")
    scale = max(np.abs(H).max(), 1.0)
    if np.abs(H - H.T).max() > tol * scale:
        raise ValueError(f"kernel asymmetric by {np.abs(H - H.T).max():.3e}")
    return 0.5 * (H + H.T)


def eigen_kernel(H, floor_rel: float = 1e-8) -> EigenKernel:
    H = _check_sym(H)
    w, P = np.linalg.eigh(H)
    w, P = w[::-1], P[:, ::-1]
    if w[0] <= 0:
        raise NotPositiveDefinite("kernel has no positive eigenvalue")
    floor = floor_rel * w[0]
    if w[-1] < -1e-6 * w[0]:
        raise NotPositiveDefinite(f"kernel has eigenvalue {w[-1]:.3e}; not positive semidefinite")
    floored = int(np.count_nonzero(w < floor))
    return EigenKernel(P, np.maximum(w, floor), floor, floored)


def flow_solution(H, y, h0, t: float) -> np.ndarray:
    """h_t = (I - exp(-tH/n)) y + h0."""
    if t < 0:
        raise ValueError("t must be non-negative")
    H = _check_sym(H)
    y = np.asarray(y, float)
    n = len(y)
    w, P = np.linalg.eigh(H)
    if math.isinf(t):
        g = np.where(w > 0, 1.0, 0.0)
    else:
        g = -np.expm1(-t * w / n)
    return P @ (g * (P.T @ y)) + np.asarray(h0, float)


def _label_aware(B, ek: EigenKernel, y, t: float) -> float:
    """y^T H^-1 G B H^-1 y - y^T P Q P^T y with G = I - e^{-tH/n} (G = I at t = inf)."""
    n = len(y)
    D = ek.D
    yt = ek.P.T @ y
    Bt = ek.P.T @ B @ ek.P
    S = D[:, None] + D[None, :]
    if math.isinf(t):
        g = np.ones(n)
        gq = np.ones((n, n))
    else:
        g = -np.expm1(-t * D / n)
        gq = -np.expm1(-t * S / n)
    first = (g * yt / D) @ Bt @ (yt / D)
    Q = gq * (Bt / D[None, :]) / S
    return float(first - yt @ Q @ yt)


def prop1_kernel(K2_0: float, K3_0_vec, K4_0_block, H, y, t: float, floor_rel: float = 1e-8) -> float:
    """Probe kernel value at finite time t from the exactly integrated hierarchy (zero initial output)."""
    if math.isinf(t):
        raise ValueError("t = inf is not accepted here; use lantk_nth")
    if t < 0:
        raise ValueError("t must be non-negative")
    y = np.asarray(y, float)
    ek = eigen_kernel(H, floor_rel)
    n = len(y)
    g = -np.expm1(-t * ek.D / n)
    lin = float(np.asarray(K3_0_vec, float) @ (ek.P @ (g / ek.D * (ek.P.T @ y))))
    return float(K2_0) + lin + _label_aware(np.asarray(K4_0_block, float), ek, y, t)


def prop1_grid(K2_0, K3_0, K4_0, H, y, t: float, floor_rel: float = 1e-8) -> np.ndarray:
    """Vectorized prop1_kernel over a set of probe pairs.

    K2_0: (p,) probe values; K3_0: (p, n); K4_0: (p, n, n).
    """
    ek = eigen_kernel(H, floor_rel)
    y = np.asarray(y, float)
    n = len(y)
    g = -np.expm1(-t * ek.D / n)
    v = ek.P @ (g / ek.D * (ek.P.T @ y))
    out = np.asarray(K2_0, float) + np.asarray(K3_0, float) @ v
    for k in range(len(out)):
        out[k] += _label_aware(K4_0[k], ek, y, t)
    return out


@dataclass(frozen=True)
class NTHConfig:
    t: float = math.inf
    use_expected_kernels: bool = True
    ridge_floor: float = 1e-8
    mc: MCConfig = field(default_factory=MCConfig)
    width: int | None = None  # scale E K4 by 1/width; None keeps the per-width coefficient
    max_n: int = 64
    cache_dir: str | None = None

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be non-negative")


def _cache_key(x, x2, X, mc: MCConfig) -> str:
    h = hashlib.sha256()
    for a in (x, x2, X):
        h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
    h.update(repr((mc.samples, mc.seed, mc.orthant, mc.jitter, mc.divisor_tol)).encode())
    return h.hexdigest()[:20]


def _block_values(x, x2, X, cfg: NTHConfig):
    """E K4 block for a probe pair as (values, metadata), optionally cached on disk."""
    if cfg.cache_dir is None:
        blk = expected_k4_block(x, x2, X, cfg.mc)
        return blk.values, blk.meta()
    path = Path(cfg.cache_dir) / f"k4block_{_cache_key(x, x2, X, cfg.mc)}.lkm"
    if path.exists():
        return io.read_matrix(path), io.read_meta(path)
    Path(cfg.cache_dir).mkdir(parents=True, exist_ok=True)
    blk = expected_k4_block(x, x2, X, cfg.mc)
    io.write_matrix(path, blk.values, blk.meta())
    return blk.values, blk.meta()


@dataclass
class NTHResult:
    values: np.ndarray
    agnostic: np.ndarray
    flagged: list
    floored: int
    singular: list = field(default_factory=list)  # probe indices with parallel inputs, left at E K2

    @property
    def label_aware(self) -> np.ndarray:
        return self.values - self.agnostic


def lantk_nth(X_train, y, probes=None, cfg: NTHConfig = NTHConfig(), X_eval=None,
              override_guardrail: bool = False) -> NTHResult:
    """Label-aware kernel E K2 + y^T H^-1 B H^-1 y - y^T P Q P^T y at t = inf.

    ``probes`` is a list of (x, x') pairs; when omitted the full symmetric grid
    over ``X_eval`` (default: the training inputs) is evaluated. For ReLU the
    fourth-order expectation diverges as x' becomes parallel to x (two delta
    factors on one line), so such probes, including the grid diagonal, keep
    their E K2 value and are listed in ``singular``.
    """
    if not math.isinf(cfg.t):
        raise ValueError("lantk_nth is the t = inf kernel; use prop1_kernel for finite t")
    if not cfg.use_expected_kernels:
        raise ValueError("lantk_nth uses expected kernels; finite-width inputs go through prop1_kernel")
    X = np.atleast_2d(np.asarray(X_train, float))
    y = np.asarray(y, float)
    n = X.shape[0]
    if n > cfg.max_n and not override_guardrail:
        raise GuardrailError(
            f"n = {n} exceeds {cfg.max_n}: every probe pair needs an n x n block of fourth-order "
            f"expectations, so the full grid costs at least O(n^4); pass the override flag to proceed")
    ek = eigen_kernel(expected_k2_matrix(X), cfg.ridge_floor)
    scale = 1.0 if cfg.width is None else 1.0 / cfg.width
    flagged = []
    tol = cfg.mc.divisor_tol

    def parallel(x, x2):
        u, v = x / np.linalg.norm(x), x2 / np.linalg.norm(x2)
        return min(np.linalg.norm(u - v), np.linalg.norm(u + v)) < tol

    def one(x, x2):
        if parallel(x, x2):
            return expected_k2(x, x2), None
        B, meta = _block_values(x, x2, X, cfg)
        flagged.extend(meta.get("flagged", []))
        return expected_k2(x, x2), _label_aware(scale * B, ek, y, math.inf)

    if probes is not None:
        res = [one(np.asarray(a, float), np.asarray(b, float)) for a, b in probes]
        ag = np.array([r[0] for r in res])
        extra = np.array([0.0 if r[1] is None else r[1] for r in res])
        singular = [k for k, r in enumerate(res) if r[1] is None]
        return NTHResult(ag + extra, ag, flagged, ek.floored, singular)
    E = X if X_eval is None else np.atleast_2d(np.asarray(X_eval, float))
    p = E.shape[0]
    vals = np.zeros((p, p))
    ag = np.zeros((p, p))
    singular = []
    for i in range(p):
        for j in range(i, p):
            a, b = one(E[i], E[j])
            if b is None:
                singular.append((i, j))
                b = 0.0
            ag[i, j] = ag[j, i] = a
            vals[i, j] = vals[j, i] = a + b
    return NTHResult(vals, ag, flagged, ek.floored, singular)


def label_aware_component(X, y, probe, cfg: NTHConfig = NTHConfig()) -> float:
    """lantk_nth minus E K2 for a single probe pair."""
    return float(lantk_nth(X, y, [probe], cfg).label_aware[0])
