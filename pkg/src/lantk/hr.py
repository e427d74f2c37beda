"""Label-aware kernels of the form E K2 + lambda * Z.

Z(x, x') estimates the product of the two labels (binary) or the same-class
indicator (multi-class) from the training set. Three families:

* ``kr_v1`` / ``kr_v2``: a similarity-weighted average of training label
  products, weighting training pair (i, j) by how close its E K2 value is to
  the probe's;
* ``fjlt_v1`` / ``fjlt_v2``: ridge regression of label products on
  hand-built pair features, solved on a randomized Hadamard sketch of the
  pairwise dataset;
* ``oracle``: the true label product (needs labels for both points).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels_analytic import expected_k2_matrix
from .sketch import make_fjlt

LAMBDA_GRID = (0.001, 0.01, 0.1, 1.0)
ESTIMATORS = ("kr_v1", "kr_v2", "fjlt_v1", "fjlt_v2", "oracle")
V1_FEATURES = ("ek2", "cos", "inner", "norm_prod", "sq_dist", "l1_dist", "angle", "sin", "rbf", "pearson")


def label_products(ya, yb=None, multiclass: bool = False) -> np.ndarray:
    """Pair targets: y_i y_j for +-1 labels, 1{y_i = y_j} for class indices."""
    ya = np.asarray(ya)
    yb = ya if yb is None else np.asarray(yb)
    if multiclass:
        return (ya[:, None] == yb[None, :]).astype(float)
    return np.outer(ya, yb).astype(float)


# ---------------------------------------------------------------------------
# pair features

def pair_features(XA, XB, bandwidth: float) -> np.ndarray:
    """(|A|, |B|, 10) array of pair features in the order of V1_FEATURES."""
    XA, XB = np.atleast_2d(XA), np.atleast_2d(XB)
    na, nb = np.linalg.norm(XA, axis=1), np.linalg.norm(XB, axis=1)
    inner = XA @ XB.T
    nprod = np.outer(na, nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(nprod > 0, inner / nprod, 0.0)
    cos = np.clip(cos, -1.0, 1.0)
    ang = np.arccos(cos)
    sq = np.maximum(na[:, None] ** 2 + nb[None, :] ** 2 - 2 * inner, 0.0)
    l1 = np.abs(XA[:, None, :] - XB[None, :, :]).sum(axis=2)
    rbf = np.exp(-sq / (2.0 * bandwidth ** 2))
    ca = XA - XA.mean(axis=1, keepdims=True)
    cb = XB - XB.mean(axis=1, keepdims=True)
    sa, sb = np.linalg.norm(ca, axis=1), np.linalg.norm(cb, axis=1)
    den = np.outer(sa, sb)
    with np.errstate(invalid="ignore", divide="ignore"):
        pear = np.where(den > 1e-12 * max(den.max(), 1e-300), (ca @ cb.T) / den, 0.0)
    safe_a = np.where(na[:, None] > 0, XA, 1.0)
    safe_b = np.where(nb[:, None] > 0, XB, 1.0)
    ek2 = np.where(nprod > 0, expected_k2_matrix(safe_a, safe_b), 0.0)
    return np.stack([ek2, cos, inner, nprod, sq, l1, ang, np.sqrt(1 - cos ** 2), rbf, pear], axis=2)


def median_bandwidth(X) -> float:
    X = np.atleast_2d(X)
    G = X @ X.T
    nrm = np.diag(G)
    D = np.sqrt(np.maximum(nrm[:, None] + nrm[None, :] - 2 * G, 0.0))
    iu = np.triu_indices(len(X), 1)
    h = float(np.median(D[iu])) if len(iu[0]) else 1.0
    return h if h > 0 else 1.0


@dataclass(frozen=True)
class PCA:
    mean: np.ndarray
    components: np.ndarray  # (k, d)

    def transform(self, X):
        return (np.atleast_2d(X) - self.mean) @ self.components.T


def fit_pca(X, k: int = 5) -> PCA:
    X = np.atleast_2d(X)
    mu = X.mean(axis=0)
    _, _, Vt = np.linalg.svd(X - mu, full_matrices=False)
    return PCA(mu, Vt[: min(k, Vt.shape[0])])


# ---------------------------------------------------------------------------
# Z model

@dataclass
class ZModel:
    kind: str
    X_train: np.ndarray
    y_train: np.ndarray
    multiclass: bool = False
    weights: np.ndarray | None = None
    intercept: float = 0.0
    feat_mean: np.ndarray | None = None
    feat_scale: np.ndarray | None = None
    bandwidths: tuple = ()
    pca: PCA | None = None
    kr_stats: dict = field(default_factory=dict)
    sketch: dict = field(default_factory=dict)
    clip: tuple = (-1.0, 1.0)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "schema": "v2" if self.kind.endswith("v2") else "v1",
            "multiclass": self.multiclass,
            "weights": None if self.weights is None else self.weights.tolist(),
            "intercept": self.intercept,
            "feat_mean": None if self.feat_mean is None else self.feat_mean.tolist(),
            "feat_scale": None if self.feat_scale is None else self.feat_scale.tolist(),
            "bandwidths": list(self.bandwidths),
            "kr_stats": self.kr_stats,
            "sketch": self.sketch,
            "clip": list(self.clip),
        }


def _features(model_or_bw, XA, XB, pca=None):
    bws = model_or_bw
    F = pair_features(XA, XB, bws[0])
    if pca is not None:
        F = np.concatenate([F, pair_features(pca.transform(XA), pca.transform(XB), bws[1])], axis=2)
    return F


# ---- kernel-regression (psi-similarity) estimators

def _kr_stats(Phi, w):
    """Scalars that make sum_ij w_i w_j psi(phi, Phi_ij) a rational function of phi."""
    n = Phi.shape[0]
    B = float((Phi.max() - Phi.min()) ** 2)
    s = float(w.sum())
    return {
        "B": B, "n2": float(n * n), "s2": s * s,
        "wPw": float(w @ Phi @ w), "wP2w": float(w @ (Phi ** 2) @ w),
        "sumP": float(Phi.sum()), "sumP2": float((Phi ** 2).sum()),
    }


def _kr_eval(st, phi):
    phi = np.asarray(phi, float)
    num = st["B"] * st["s2"] - (phi ** 2 * st["s2"] - 2 * phi * st["wPw"] + st["wP2w"])
    den = st["n2"] * st["B"] - (st["n2"] * phi ** 2 - 2 * phi * st["sumP"] + st["sumP2"])
    if np.any(np.abs(den) < 1e-300):
        raise ZeroDivisionError("degenerate similarity normalizer: all training kernel values equal the probe value")
    return num / den


def psi_weights(phi_probe: float, Phi_train) -> np.ndarray:
    """psi(phi_ab, phi_ij) = (B - (phi_ab - phi_ij)^2) / (n^2 B - sum_st (phi_ab - phi_st)^2)."""
    Phi = np.asarray(Phi_train, float)
    n = Phi.shape[0]
    B = (Phi.max() - Phi.min()) ** 2
    num = B - (phi_probe - Phi) ** 2
    den = n * n * B - ((phi_probe - Phi) ** 2).sum()
    if abs(den) < 1e-300:
        raise ZeroDivisionError("degenerate similarity normalizer: all training kernel values equal the probe value")
    return num / den


def z_kr(y, K2_train, variant: str, phi_probe, floor_rel: float = 1e-8, multiclass: bool = False) -> np.ndarray:
    """Direct psi-weighted sum over all n^2 training pairs (reference implementation)."""
    K2_train = np.asarray(K2_train, float)
    T, w = _kr_targets(y, K2_train, variant, floor_rel, multiclass)
    out = []
    for phi in np.atleast_1d(phi_probe):
        out.append(float((psi_weights(phi, K2_train) * T).sum()))
    return np.array(out) if np.ndim(phi_probe) else out[0]


def _kr_targets(y, K2_train, variant, floor_rel, multiclass):
    y = np.asarray(y)
    if variant == "v1":
        w = np.asarray(y, float)
        return label_products(y, multiclass=multiclass), w
    if variant == "v2":
        if multiclass:
            raise ValueError("the v2 similarity estimator is defined for binary labels")
        from .nth import eigen_kernel
        ek = eigen_kernel(K2_train, floor_rel)
        w = ek.inv_apply(np.asarray(y, float))
        return np.outer(w, w), w
    raise ValueError(f"unknown variant {variant!r}")


def fit_z_kr(X, y, variant: str = "v1", floor_rel: float = 1e-8, multiclass: bool = False) -> ZModel:
    X = np.atleast_2d(np.asarray(X, float))
    Phi = expected_k2_matrix(X)
    if multiclass:
        if variant != "v1":
            raise ValueError("the v2 similarity estimator is defined for binary labels")
        st = {}
        y = np.asarray(y)
        classes = np.unique(y)
        # sum_ij 1{y_i = y_j} psi_ij = sum_c sum_ij e^c_i e^c_j psi_ij
        parts = [_kr_stats(Phi, (y == c).astype(float)) for c in classes]
        st = dict(parts[0])
        for key in ("s2", "wPw", "wP2w"):
            st[key] = float(sum(p[key] for p in parts))
    else:
        _, w = _kr_targets(y, Phi, variant, floor_rel, False)
        st = _kr_stats(Phi, w)
    if st["B"] == 0:
        raise ZeroDivisionError("all training kernel values are equal; the similarity weights are undefined")
    return ZModel(f"kr_{variant}", X, np.asarray(y), multiclass, kr_stats=st)


# ---- sketched linear regression on pair features

def fit_z_fjlt(X, y, variant: str = "v1", sketch_dim: int = 8192, ridge: float = 1e-3,
               seed: int = 0, multiclass: bool = False, max_pairs: int = 1_000_000) -> ZModel:
    """Ridge regression of pair targets on standardized pair features.

    The n^2 pairwise rows are compressed with a randomized Hadamard sketch
    when there are more of them than ``sketch_dim``.
    """
    X = np.atleast_2d(np.asarray(X, float))
    y = np.asarray(y)
    n = X.shape[0]
    pca = fit_pca(X, 5) if variant == "v2" else None
    bws = (median_bandwidth(X),) + ((median_bandwidth(pca.transform(X)),) if pca else ())
    F = _features(bws, X, X, pca).reshape(n * n, -1)
    t = label_products(y, multiclass=multiclass).ravel()
    rng = np.random.default_rng(seed)
    if len(t) > max_pairs:
        keep = np.sort(rng.choice(len(t), size=max_pairs, replace=False))
        F, t = F[keep], t[keep]
    mu = F.mean(axis=0)
    sd = F.std(axis=0)
    sd[sd < 1e-12] = 1.0
    A = np.column_stack([(F - mu) / sd, np.ones(len(t))])
    info = {"rows": int(len(t)), "sketch_dim": None, "seed": seed}
    if len(t) > sketch_dim:
        S = make_fjlt(len(t), sketch_dim, seed)
        A, t = S.apply(A), S.apply(t)
        info["sketch_dim"] = sketch_dim
    p = A.shape[1]
    pen = ridge * np.ones(p)
    pen[-1] = 0.0  # intercept unpenalized
    G = A.T @ A + np.diag(pen)
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("singular normal equations; use ridge > 0") from None
    coef = np.linalg.solve(L.T, np.linalg.solve(L, A.T @ t))
    return ZModel(f"fjlt_{variant}", X, y, multiclass, coef[:-1], float(coef[-1]), mu, sd, bws, pca, sketch=info)


def fit_z(kind: str, X, y, multiclass: bool = False, **kw) -> ZModel:
    if kind in ("kr_v1", "kr_v2"):
        return fit_z_kr(X, y, kind[-2:], multiclass=multiclass, **kw)
    if kind in ("fjlt_v1", "fjlt_v2"):
        return fit_z_fjlt(X, y, kind[-2:], multiclass=multiclass, **kw)
    if kind == "oracle":
        return ZModel("oracle", np.atleast_2d(np.asarray(X, float)), np.asarray(y), multiclass)
    raise ValueError(f"unknown estimator {kind!r}; choose from {ESTIMATORS}")


def z_matrix(model: ZModel, XA, XB=None, ya=None, yb=None, clip: bool = True) -> np.ndarray:
    """Z for every (row of XA, row of XB); XB defaults to the training inputs.

    The oracle needs the labels ``ya`` and ``yb`` (``yb`` defaults to the training labels).
    """
    XA = np.atleast_2d(np.asarray(XA, float))
    XB = model.X_train if XB is None else np.atleast_2d(np.asarray(XB, float))
    if model.kind == "oracle":
        if ya is None:
            raise ValueError("the oracle estimator needs labels for the first argument")
        yb = model.y_train if yb is None else yb
        Z = label_products(ya, yb, model.multiclass)
    elif model.kind.startswith("kr_"):
        Z = _kr_eval(model.kr_stats, expected_k2_matrix(XA, XB))
    elif model.kind.startswith("fjlt_"):
        F = _features(model.bandwidths, XA, XB, model.pca)
        if F.shape[2] != len(model.weights):
            raise ValueError(f"feature schema has {F.shape[2]} columns, model expects {len(model.weights)}")
        Z = ((F - model.feat_mean) / model.feat_scale) @ model.weights + model.intercept
    else:
        raise ValueError(f"unknown estimator {model.kind!r}")
    return np.clip(Z, *model.clip) if clip else Z


def z_predict(model: ZModel, x, x2, ya=None, yb=None) -> float:
    ya = None if ya is None else [ya]
    yb = None if yb is None else [yb]
    return float(z_matrix(model, [x], [x2], ya, yb)[0, 0])


def lantk_hr(K2_expected, Z, lam: float) -> np.ndarray:
    """E K2 + lambda * Z, entrywise."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    K2_expected, Z = np.asarray(K2_expected, float), np.asarray(Z, float)
    if K2_expected.shape != Z.shape:
        raise ValueError(f"shape mismatch {K2_expected.shape} vs {Z.shape}")
    return K2_expected + lam * Z
