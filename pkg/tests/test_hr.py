import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lantk import hr
from lantk.kernels_analytic import expected_k2, expected_k2_matrix


def _task(seed, n=30, d=4, shift=0.0):
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    X = rng.standard_normal((n, d)) + shift * y[:, None] * np.eye(d)[0]
    return X, y


# ---- similarity-weighted estimator

@given(st.integers(0, 2 ** 31), st.floats(-2, 2))
def test_psi_weights_sum_to_one(seed, phi):
    X, _ = _task(seed, n=6)
    w = hr.psi_weights(phi, expected_k2_matrix(X))
    assert abs(w.sum() - 1) < 1e-10


def test_all_positive_labels_give_one(rng):
    X = rng.standard_normal((8, 3))
    K = expected_k2_matrix(X)
    assert hr.z_kr(np.ones(8), K, "v1", 0.3) == pytest.approx(1.0, abs=1e-12)


def test_spiked_similarity_concentrates_on_one_pair():
    Phi = np.zeros((5, 5))
    Phi[1, 3] = Phi[3, 1] = 1.0
    y = np.array([1.0, 1.0, -1.0, -1.0, 1.0])
    w = hr.psi_weights(1.0, Phi)
    assert w[1, 3] == w[3, 1] == 0.5 and np.count_nonzero(w) == 2
    assert hr.z_kr(y, Phi, "v1", 1.0) == pytest.approx(y[1] * y[3], abs=1e-15)
    # moving the probe away from the spike spreads the weight again
    assert abs(hr.z_kr(y, Phi, "v1", 0.9)) < 1.0


def test_degenerate_similarity_normalizer():
    with pytest.raises(ZeroDivisionError):
        hr.psi_weights(0.5, np.full((3, 3), 0.5))
    with pytest.raises(ZeroDivisionError):
        hr.fit_z_kr(np.ones((1, 3)), np.ones(1))


@pytest.mark.parametrize("variant", ["v1", "v2"])
def test_z_predict_delegates_to_direct_sum(variant):
    X, y = _task(1, n=12)
    K = expected_k2_matrix(X)
    model = hr.fit_z(f"kr_{variant}", X, y)
    rng = np.random.default_rng(2)
    P = rng.standard_normal((3, 4))
    Zm = hr.z_matrix(model, P, clip=False)
    for a in range(3):
        for b in range(12):
            direct = hr.z_kr(y, K, variant, expected_k2(P[a], X[b]))
            assert Zm[a, b] == pytest.approx(direct, abs=1e-9)
    assert hr.z_predict(model, P[0], X[1]) == pytest.approx(float(np.clip(Zm[0, 1], -1, 1)), abs=1e-12)


def test_multiclass_kr_matches_indicator_sum():
    rng = np.random.default_rng(3)
    X, y = rng.standard_normal((9, 3)), rng.integers(0, 3, 9)
    model = hr.fit_z_kr(X, y, multiclass=True)
    phi = 0.2
    K = expected_k2_matrix(X)
    direct = (hr.psi_weights(phi, K) * hr.label_products(y, multiclass=True)).sum()
    assert float(hr._kr_eval(model.kr_stats, phi)) == pytest.approx(direct, abs=1e-10)
    with pytest.raises(ValueError):
        hr.fit_z_kr(X, y, "v2", multiclass=True)


# ---- sketched pair-feature regression

def test_pair_feature_schema(rng):
    X = rng.standard_normal((4, 6))
    F = hr.pair_features(X, X, 1.0)
    assert F.shape == (4, 4, len(hr.V1_FEATURES)) == (4, 4, 10)
    i, j = 0, 2
    x, x2 = X[i], X[j]
    c = x @ x2 / np.linalg.norm(x) / np.linalg.norm(x2)
    expect = [expected_k2(x, x2), c, x @ x2, np.linalg.norm(x) * np.linalg.norm(x2), np.sum((x - x2) ** 2),
              np.sum(np.abs(x - x2)), np.arccos(c), np.sqrt(1 - c * c), np.exp(-np.sum((x - x2) ** 2) / 2),
              np.corrcoef(x, x2)[0, 1]]
    np.testing.assert_allclose(F[i, j], expect, rtol=1e-10)


def test_pearson_of_constant_vector_is_zero():
    F = hr.pair_features(np.ones((1, 3)), np.array([[1.0, 2.0, 3.0]]), 1.0)
    assert F[0, 0, 9] == 0.0


def test_v2_has_twenty_features():
    X, y = _task(4)
    model = hr.fit_z_fjlt(X, y, "v2")
    assert len(model.weights) == 20 and model.pca.components.shape == (4, 4)
    assert hr.z_matrix(model, X[:3]).shape == (3, 30)
    v1 = hr.fit_z_fjlt(X, y, "v1")
    with pytest.raises(ValueError, match="schema"):
        hr.z_matrix(hr.ZModel(**{**v1.__dict__, "weights": model.weights}), X[:2])


def test_fjlt_constant_target():
    X, _ = _task(5)
    model = hr.fit_z_fjlt(X, np.ones(30))
    np.testing.assert_allclose(hr.z_matrix(model, X, clip=False), 1.0, atol=1e-3)


def test_fjlt_antipodal_clusters_sign_agreement():
    rng = np.random.default_rng(6)
    y = np.where(np.arange(40) < 20, 1.0, -1.0)
    mu = np.zeros(5)
    mu[0] = 6.0
    X = y[:, None] * mu + 0.5 * rng.standard_normal((40, 5))
    model = hr.fit_z_fjlt(X, y)
    Z = hr.z_matrix(model, X)
    assert np.mean(np.sign(Z) == np.outer(y, y)) > 0.95


def test_fjlt_pair_order_invariance():
    X, y = _task(7, n=40)
    a = hr.fit_z_fjlt(X, y)
    perm = np.random.default_rng(0).permutation(40)
    b = hr.fit_z_fjlt(X[perm], y[perm])
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-9)
    assert a.intercept == pytest.approx(b.intercept, abs=1e-9)


def test_fjlt_sketched_fit_is_deterministic():
    X, y = _task(8, n=120)
    a = hr.fit_z_fjlt(X, y, sketch_dim=4096, seed=3)
    b = hr.fit_z_fjlt(X, y, sketch_dim=4096, seed=3)
    assert a.sketch["sketch_dim"] == 4096
    np.testing.assert_array_equal(a.weights, b.weights)
    json.dumps(a.to_json())


def test_fjlt_singular_without_ridge():
    with pytest.raises(np.linalg.LinAlgError, match="ridge > 0"):
        hr.fit_z_fjlt(np.ones((1, 3)), np.ones(1), ridge=0.0)


def test_fjlt_pair_cap(rng):
    X, y = _task(9, n=50)
    m = hr.fit_z_fjlt(X, y, max_pairs=1000, sketch_dim=512)
    assert m.sketch["rows"] == 1000


@pytest.mark.parametrize("kind", ["kr_v1", "fjlt_v1", "fjlt_v2"])
def test_label_flip_leaves_z_unchanged(kind):
    X, y = _task(10, n=20)
    a = hr.z_matrix(hr.fit_z(kind, X, y), X)
    b = hr.z_matrix(hr.fit_z(kind, X, -y), X)
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_clip_contract():
    X, y = _task(11, n=10)
    m = hr.fit_z_fjlt(X, y)
    m.weights = np.zeros_like(m.weights)
    m.intercept = 1.7
    assert hr.z_predict(m, X[0], X[1]) == 1.0
    assert hr.z_matrix(m, X[:1], X[1:2], clip=False)[0, 0] == pytest.approx(1.7)


def test_unknown_estimator():
    with pytest.raises(ValueError, match="unknown estimator"):
        hr.fit_z("nn", np.ones((2, 2)), np.ones(2))


# ---- assembly

def test_oracle_and_lambda_zero():
    X, y = _task(12, n=10)
    K = expected_k2_matrix(X)
    oracle = hr.fit_z("oracle", X, y)
    Z = hr.z_matrix(oracle, X, ya=y)
    np.testing.assert_array_equal(Z, np.outer(y, y))
    assert hr.z_predict(oracle, X[2], X[5], y[2], y[5]) == y[2] * y[5]
    np.testing.assert_array_equal(hr.lantk_hr(K, Z, 0.0), K)
    np.testing.assert_allclose(hr.lantk_hr(K, Z, 0.1), K + 0.1 * np.outer(y, y), atol=1e-15)
    with pytest.raises(ValueError):
        hr.z_matrix(oracle, X)
    with pytest.raises(ValueError):
        hr.lantk_hr(K, Z[:3], 0.1)
    with pytest.raises(ValueError):
        hr.lantk_hr(K, Z, -0.1)


def test_multiclass_oracle_shifts_only_intra_pairs(rng):
    X, y = rng.standard_normal((9, 3)), rng.integers(0, 3, 9)
    K = expected_k2_matrix(X)
    Z = hr.z_matrix(hr.fit_z("oracle", X, y, multiclass=True), X, ya=y)
    D = hr.lantk_hr(K, Z, 0.5) - K
    same = y[:, None] == y[None, :]
    np.testing.assert_allclose(D[same], 0.5)
    assert np.all(D[~same] == 0)


def test_symmetric_on_train_grid():
    X, y = _task(13, n=12)
    K = expected_k2_matrix(X)
    for kind in ("kr_v1", "fjlt_v1"):
        H = hr.lantk_hr(K, hr.z_matrix(hr.fit_z(kind, X, y), X), 0.1)
        np.testing.assert_allclose(H, H.T, atol=1e-12)


@pytest.mark.parametrize("lam", hr.LAMBDA_GRID)
def test_oracle_never_reduces_alignment(lam):
    for seed in range(5):
        X, y = _task(seed, n=16)
        K = expected_k2_matrix(X)
        Y = np.outer(y, y)
        H = hr.lantk_hr(K, Y, lam)
        assert np.sum(H * Y) >= np.sum(K * Y)
        cos = lambda A: np.sum(A * Y) / (np.linalg.norm(A) * np.linalg.norm(Y))  # noqa: E731
        assert cos(H) >= cos(K) - 1e-12
