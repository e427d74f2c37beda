"""Oracle-backed release checks, each small enough to run in seconds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hoeffding as hd
from . import hr, nth
from .kernels_analytic import expected_k2_matrix, orthant_prob_mc, orthant_prob_quadrature
from .oracles import hierarchy_by_quadrature, mc_mean_k2
from .sketch import fwht, make_fjlt


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str


def suite_analytic_vs_mc(seed: int, k2_matrix=expected_k2_matrix) -> SuiteResult:
    """Closed-form E K2 against the mean empirical ReLU kernel over random inits."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((4, 5)) / np.sqrt(5)
    mean, se = mc_mean_k2(X, inits=20, width=20_000, seed=seed)
    z = np.abs(mean - k2_matrix(X)) / np.maximum(se, 1e-12)
    return SuiteResult("analytic-vs-mc", bool(z.max() < 5.0), f"max z = {z.max():.2f}")


def suite_orthant(seed: int) -> SuiteResult:
    p, se = orthant_prob_mc(np.eye(4), 200_000, seed)
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((4, 4))
    G = V @ V.T
    s = np.sqrt(np.diag(G))
    q = orthant_prob_quadrature(G / np.outer(s, s))
    pm, sem = orthant_prob_mc(V, 200_000, seed + 1)
    ok = abs(p - 0.0625) < 4 * se and abs(pm - q) < 4 * sem
    return SuiteResult("orthant", bool(ok), f"I4: {p:.5f} +- {se:.5f}; random: mc {pm:.5f} vs quad {q:.5f}")


def suite_finite_time(seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    n = 4
    A = rng.standard_normal((n, n))
    H = A @ A.T + 0.1 * np.eye(n)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    K3, B = rng.standard_normal(n), rng.standard_normal((n, n))
    t = n / np.linalg.eigvalsh(H)[-1]
    a = nth.prop1_kernel(0.5, K3, B, H, y, t)
    b = hierarchy_by_quadrature(0.5, K3, B, H, y, t)
    return SuiteResult("finite-time-vs-quadrature", bool(abs(a - b) < 1e-8), f"|diff| = {abs(a - b):.2e}")


def suite_hoeffding(seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (2, 3, 4):
        law = hd.product_law(rng.uniform(0.1, 0.9, n))
        f = rng.standard_normal(1 << n)
        dec = hd.decompose(f, law)
        worst = max(worst, np.abs(sum(dec.components.values()) - f).max())
        comps = list(dec.components.values())
        for i in range(len(comps)):
            for j in range(i + 1, len(comps)):
                worst = max(worst, abs(hd.inner(comps[i], comps[j], law)))
    # an entry of E K2 + lambda Z with the similarity-weighted estimator is quadratic in the labels
    X = rng.standard_normal((4, 3))
    K = expected_k2_matrix(X)
    f = hd.table_from(lambda s: K[0, 1] + 0.5 * hr.z_kr(s, K, "v1", K[0, 1]), 4)
    dec = hd.decompose(f, hd.uniform_law(4))
    high = max(np.abs(g).max() for A, g in dec.components.items() if len(A) > 2)
    worst = max(worst, high)
    return SuiteResult("hoeffding", bool(worst < 1e-10), f"max error {worst:.1e}")


def suite_fwht(seed: int) -> SuiteResult:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(64)
    inv = np.abs(fwht(fwht(v)) - 64 * v).max()
    norm = abs(np.linalg.norm(fwht(v)) ** 2 - 64 * np.linalg.norm(v) ** 2)
    S = make_fjlt(1024, 256, seed)
    U = rng.standard_normal((1024, 200))
    U /= np.linalg.norm(U, axis=0)
    frac = float(np.mean(np.abs(np.linalg.norm(S.apply(U), axis=0) - 1) <= 0.3))
    ok = inv < 1e-9 and norm < 1e-8 and frac >= 0.95
    return SuiteResult("fwht", bool(ok), f"involution {inv:.1e}, JL within 0.3: {frac:.3f}")


SUITES = (suite_analytic_vs_mc, suite_orthant, suite_finite_time, suite_hoeffding, suite_fwht)


def run_all(seed: int = 0, **overrides) -> list[SuiteResult]:
    """Run every suite; ``overrides`` maps suite function names to replacements (used for mutation tests)."""
    return [overrides.get(s.__name__, s)(seed) for s in SUITES]
