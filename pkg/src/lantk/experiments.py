"""Experiment drivers shared by the CLI, the scripts and the acceptance tests.

Every function is deterministic given its seed and returns plain dicts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dataset as ds
from . import elasticity as el
from . import hr, net2, nth, regress
from .config import substream, subseed
from .kernels_analytic import MCConfig, expected_k2_matrix
from .synthetic import relabel_data, generate


# ---------------------------------------------------------------------------
# kernel regression benchmark

def _fit_eval(K, targets, Kv, Kt, ridge, indefinite, yv, yt):
    model = regress.fit(K, targets, ridge, indefinite=indefinite)
    val = regress.accuracy(regress.decide(regress.predict(model, Kv)), yv)
    test = regress.accuracy(regress.decide(regress.predict(model, Kt)), yt)
    return val, test


def benchmark_split(X, y, Xv, yv, Xt, yt, estimators=("fjlt_v1",), lam_grid=hr.LAMBDA_GRID,
                    ridge=None, seed=0, multiclass=False):
    """Accuracy of E K2 and of E K2 + lambda Z for each estimator, lambda picked on validation.

    The same ridge (default: the agnostic kernel's default) is used for every
    kernel. Ties in validation accuracy go to the smaller lambda.
    """
    K, Kv, Kt = expected_k2_matrix(X), expected_k2_matrix(Xv, X), expected_k2_matrix(Xt, X)
    ridge = regress.default_ridge(K) if ridge is None else float(ridge)
    if multiclass:
        C = int(max(y.max(), yv.max(), yt.max())) + 1
        targets = regress.one_hot(y, C)
    else:
        targets = y
    val, test = _fit_eval(K, targets, Kv, Kt, ridge, False, yv, yt)
    rows = [{"kernel": "agnostic", "lam": 0.0, "val_acc": val, "test_acc": test, "ridge": ridge}]
    for est in estimators:
        if est == "oracle":
            Z = hr.label_products(y, multiclass=multiclass)
            Zv = hr.label_products(yv, y, multiclass)
            Zt = hr.label_products(yt, y, multiclass)
        else:
            kw = {"seed": seed} if est.startswith("fjlt") else {}
            zm = hr.fit_z(est, X, y, multiclass=multiclass, **kw)
            Z, Zv, Zt = hr.z_matrix(zm, X), hr.z_matrix(zm, Xv), hr.z_matrix(zm, Xt)
        best = None
        for lam in sorted(lam_grid):
            v, te = _fit_eval(hr.lantk_hr(K, Z, lam), targets, Kv + lam * Zv, Kt + lam * Zt,
                              ridge, True, yv, yt)
            if best is None or v > best["val_acc"]:
                best = {"kernel": f"hr_{est}", "lam": lam, "val_acc": v, "test_acc": te, "ridge": ridge}
        rows.append(best)
    return rows


@dataclass(frozen=True)
class BenchmarkSizes:
    n_train: int = 500
    n_val: int = 200
    n_test: int = 1000


def benchmark(data: dict, seed: int, sizes: BenchmarkSizes = BenchmarkSizes(), **kw):
    """Draw train/val/test from a synthetic generator and run ``benchmark_split``."""
    rng = substream(seed, "benchmark-data")
    state: dict = {}
    X, y = generate(data, sizes.n_train, rng, state)
    Xv, yv = generate(data, sizes.n_val, rng, state)
    Xt, yt = generate(data, sizes.n_test, rng, state)
    multiclass = data.get("generator") == "multi_clusters"
    return benchmark_split(X, y, Xv, yv, Xt, yt, seed=subseed(seed, "z-sketch"), multiclass=multiclass, **kw)


# ---------------------------------------------------------------------------
# fixed kernels cannot adapt to a relabelling

def relabel_demo(seed: int, n: int = 400, margin: float = 3.0, spread: float = 1.0,
                lateral: float = 3.0, lam: float = 1.0) -> dict:
    """Linear kernel on 2-D features under two label systems, plus the oracle label-aware kernel.

    Half of the points train, half test.
    """
    if n < 40:
        raise ValueError("n must be at least 40")
    rng = substream(seed, "relabel")
    Phi, eta1, eta2, th1, th2 = relabel_data(n, rng, margin, spread, lateral)
    tr, te = np.arange(n // 2), np.arange(n // 2, n)
    K, Kt = Phi[tr] @ Phi[tr].T, Phi[te] @ Phi[tr].T

    def acc(Ktr, Kte, y):
        m = regress.fit(Ktr, y[tr])
        return regress.accuracy(regress.decide(regress.predict(m, Kte)), y[te])

    Zt = hr.label_products(eta2[te], eta2[tr])
    return {
        "seed": seed, "n": n, "theta1": th1.tolist(), "theta2": th2.tolist(),
        "eta1_fixed_acc": acc(K, Kt, eta1),
        "eta2_fixed_acc": acc(K, Kt, eta2),
        "eta2_oracle_hr_acc": acc(hr.lantk_hr(K, hr.label_products(eta2[tr]), lam), Kt + lam * Zt, eta2),
        "lam": lam,
    }


# ---------------------------------------------------------------------------
# local elasticity

@dataclass(frozen=True)
class ElasticitySetup:
    n_train: int = 100
    n_test: int = 100
    d: int = 8
    sep: float = 1.0
    offset: float = 1.5
    width: int = 64
    step_size: float = 1.0
    steps: int = 2000
    estimator: str = "fjlt_v1"
    lam: float = 0.1


def _normalized_both_modes(kfun, X, Xt):
    K = kfun(X, X)
    dtr = np.diag(K).copy()
    dte = np.array([kfun(Xt[i:i + 1], Xt[i:i + 1])[0, 0] for i in range(len(Xt))])
    return {"train-train": el.normalized_matrix(K, dtr),
            "test-train": el.normalized_matrix(kfun(Xt, X), dte, dtr)}


def elasticity(seed: int, setup: ElasticitySetup = ElasticitySetup(), data: dict | None = None,
               with_pairs: bool = False) -> dict:
    """RR of the empirical kernel before and after training, and of E K2 with and without Z.

    Returns {"reports": {source: {mode: ElasticityReport}}} and, with ``with_pairs``,
    "pairs": rows (source, mode, bucket, i, j, similarity) for plotting.
    """
    data = data or {"generator": "two_clusters", "d": setup.d, "sep": setup.sep, "offset": setup.offset}
    rng = substream(seed, "elasticity-data")
    X, y = generate(data, setup.n_train, rng)
    Xt, yt = generate(data, setup.n_test, rng)
    tr, te = ds.from_binary(X, y), ds.from_binary(Xt, yt)
    pseed = subseed(seed, "pairs")
    pairs = {"train-train": ds.enumerate_pairs(tr, "train-train", seed=pseed),
             "test-train": ds.enumerate_pairs(te, "test-train", other=tr, seed=pseed)}
    net0 = net2.init_net(X.shape[1], setup.width, "relu", subseed(seed, "init"))
    trained = net2.train_gd(net0, X, y, setup.step_size, setup.steps).nets[-1]
    kw = {"seed": subseed(seed, "z-sketch")} if setup.estimator.startswith("fjlt") else {}
    zm = hr.fit_z(setup.estimator, X, y, **kw)
    sources = {
        "empirical_init": lambda A, B: net2.empirical_k2(net0, A, B),
        "empirical_trained": lambda A, B: net2.empirical_k2(trained, A, B),
        "agnostic": lambda A, B: expected_k2_matrix(A, B),
        f"hr_{setup.estimator}": lambda A, B: expected_k2_matrix(A, B) + setup.lam * hr.z_matrix(zm, A, B),
    }
    reports, rows = {}, []
    for name, f in sources.items():
        Kbar = _normalized_both_modes(f, X, Xt)
        reports[name] = {mode: el.relative_ratio(Kbar[mode], pairs[mode], {"source": name, "seed": seed})
                         for mode in Kbar}
        if with_pairs:
            for mode, M in Kbar.items():
                for bucket in ("intra", "inter"):
                    for i, j in getattr(pairs[mode], bucket):
                        rows.append((name, mode, bucket, int(i), int(j), float(M[i, j])))
    out = {"reports": reports}
    if with_pairs:
        out["pairs"] = rows
    return out


# ---------------------------------------------------------------------------
# label-aware component of the t = inf hierarchy kernel

@dataclass(frozen=True)
class ProbeSetup:
    n: int = 10
    d: int = 5
    sep: float = 1.0
    probes_per_class: int = 3
    mc_samples: int = 20_000


def nth_probe(seed: int, setup: ProbeSetup = ProbeSetup(), orthant: str = "mc") -> dict:
    """Mean label-aware component over same-label and different-label probe pairs."""
    rng = substream(seed, "nth-probe")
    d = setup.d
    y = np.resize([1.0, -1.0], setup.n)
    X = y[:, None] * setup.sep * np.eye(d)[0] + rng.standard_normal((setup.n, d)) / np.sqrt(d)
    yp = np.repeat([1.0, -1.0], setup.probes_per_class)
    P = yp[:, None] * setup.sep * np.eye(d)[0] + rng.standard_normal((len(yp), d)) / np.sqrt(d)
    idx = [(i, j) for i in range(len(P)) for j in range(i + 1, len(P))]
    cfg = nth.NTHConfig(mc=MCConfig(samples=setup.mc_samples, seed=subseed(seed, "orthant"), orthant=orthant))
    res = nth.lantk_nth(X, y, [(P[i], P[j]) for i, j in idx], cfg)
    same = np.array([yp[i] == yp[j] for i, j in idx])
    la = res.label_aware
    return {"seed": seed, "intra_mean": float(la[same].mean()), "inter_mean": float(la[~same].mean()),
            "values": la.tolist(), "same": same.tolist(), "flagged": len(res.flagged)}


# ---------------------------------------------------------------------------
# finite-width check of the second-order truncation

def width_gap(seed: int, width: int, n: int = 20, d: int = 10, horizon: float = 1.0,
              n_times: int = 8, task_seed: int = 1000) -> dict:
    """max over a time grid and all training pairs of |K2_t - truncated prediction|.

    Symmetric tanh init (zero initial output). Training follows gradient flow
    up to ``horizon * n / lambda_min(K2_0)``. The task is fixed by ``task_seed``;
    ``seed`` only changes the initialization.
    """
    rng = substream(task_seed, "width-task")
    X = rng.standard_normal((n, d))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    y = np.where(X[:, 0] >= 0, 1.0, -1.0)
    net = net2.init_net(d, width, "tanh", subseed(seed, "width-init", width), symmetric=True)
    H = net2.empirical_k2(net, X)
    lam_min = float(np.linalg.eigvalsh(H)[0])
    T = horizon * n / lam_min
    times = np.linspace(0.0, T, n_times + 1)[1:]
    iu = np.triu_indices(n)
    K3 = np.stack([net2.k3_vector(net, X[i], X[j], X) for i, j in zip(*iu)])
    K4 = np.stack([net2.k4_block(net, X[i], X[j], X) for i, j in zip(*iu)])
    snaps = net2.train_flow(net, X, y, times)
    gap = 0.0
    for t, s in zip(times, snaps):
        pred = nth.prop1_grid(H[iu], K3, K4, H, y, t)
        gap = max(gap, float(np.abs(net2.empirical_k2(s, X)[iu] - pred).max()))
    drift = float(np.abs(net2.empirical_k2(snaps[-1], X) - H).max())
    return {"seed": seed, "width": width, "gap": gap, "drift": drift, "horizon": T, "lambda_min": lam_min}


# ---------------------------------------------------------------------------
# brute-force Hoeffding checks

def hoeffding_check(seed: int, trials: int = 100, ns=(2, 3, 4), lam: float = 0.5) -> dict:
    """Worst reconstruction and cross-orthogonality errors over random functions and product laws,
    and the largest component above order 2 of a label-aware kernel entry viewed as a function of the labels.
    """
    from . import hoeffding as hd

    rng = substream(seed, "hoeffding")
    recon = orth = member = 0.0
    for n in ns:
        for _ in range(trials):
            law = hd.product_law(rng.uniform(0.05, 0.95, n))
            f = rng.standard_normal(1 << n)
            dec = hd.decompose(f, law)
            recon = max(recon, float(np.abs(sum(dec.components.values()) - f).max()))
            keys = list(dec.components)
            for a in range(len(keys)):
                g = dec.components[keys[a]]
                for b in range(a + 1, len(keys)):
                    orth = max(orth, abs(hd.inner(g, dec.components[keys[b]], law)))
                # membership: conditioning on any strictly smaller label set gives zero
                for r in range(len(keys[a])):
                    for B in hd.subsets(n, r):
                        if len(B) < len(keys[a]):
                            member = max(member, float(np.abs(hd.cond_expectation(g, law, B)).max()))
    high = 0.0
    for _ in range(10):
        X = rng.standard_normal((4, 3))
        K = expected_k2_matrix(X)
        i, j = rng.integers(0, 4, size=2)
        f = hd.table_from(lambda s: K[i, j] + lam * hr.z_kr(s, K, "v1", K[i, j]), 4)
        dec = hd.decompose(f, hd.uniform_law(4))
        high = max(high, max(float(np.abs(g).max()) for A, g in dec.components.items() if len(A) > 2))
        rebuilt = float(np.abs(hd.truncate(dec, 2) - f).max())
        high = max(high, rebuilt)
    return {"seed": seed, "trials": trials, "ns": list(ns), "max_reconstruction_error": recon,
            "max_cross_inner_product": orth, "max_membership_violation": member,
            "max_hr_entry_high_order": high}
