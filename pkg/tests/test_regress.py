import numpy as np
import pytest
from hypothesis import given, strategies as st

from lantk import regress
from lantk.kernels_analytic import expected_k2_matrix
from lantk.synthetic import ClusterSpec, two_clusters


def test_identity_kernel():
    y = np.array([1.0, -1.0, 1.0])
    m = regress.fit(np.eye(3), y, ridge=0.5)
    np.testing.assert_allclose(m.alpha, y / 1.5)
    # K (K + r I)^-1 y = y / 1.5 on the identity kernel, up to a single rounding
    np.testing.assert_allclose(np.linalg.solve(np.eye(3) + 0.5 * np.eye(3), y), m.alpha, atol=1e-15)


def test_rank_deficient_without_ridge():
    with pytest.raises(regress.NotPositiveDefinite, match="ridge"):
        regress.fit(np.ones((3, 3)), np.ones(3), ridge=0.0)
    with pytest.raises(regress.NotPositiveDefinite):
        regress.fit(np.diag([1.0, -1.0]), np.ones(2), ridge=0.0)


def test_huge_ridge_shrinks_to_zero(rng):
    X = rng.standard_normal((5, 3))
    m = regress.fit(expected_k2_matrix(X), rng.standard_normal(5), ridge=1e12)
    assert np.abs(m.alpha).max() < 1e-6


def test_solution_residual(rng):
    X = rng.standard_normal((20, 4))
    K = expected_k2_matrix(X)
    y = np.sign(rng.standard_normal(20))
    m = regress.fit(K, y)
    assert np.linalg.norm((K + m.ridge * np.eye(20)) @ m.alpha - y) <= 1e-8 * np.linalg.norm(y)
    assert m.ridge == pytest.approx(1e-6 * np.trace(K) / 20)


def test_interpolation_reproduces_targets(rng):
    X = rng.standard_normal((8, 4))
    K = expected_k2_matrix(X)
    y = rng.standard_normal(8)
    m = regress.fit(K, y, ridge=0.0)
    np.testing.assert_allclose(regress.predict(m, K[2:3]), y[2:3], atol=1e-8)


def test_decision_conventions():
    m = regress.KernelRegressor(np.array([1.0, -1.0]), 0.0, False, {})
    assert regress.decide(regress.predict(m, np.zeros((1, 2))))[0] == 1.0
    assert regress.decide(np.array([[0.3, 0.3, 0.1]]))[0] == 0
    with pytest.raises(ValueError):
        regress.predict(m, np.zeros((1, 3)))


def test_accuracy():
    y = np.array([1.0, -1.0, 1.0, 1.0])
    assert regress.accuracy(y, y) == 1.0
    p = np.array([1.0, 1.0, 1.0, -1.0])
    assert regress.accuracy(-p, y) == pytest.approx(1 - regress.accuracy(p, y))
    with pytest.raises(ValueError):
        regress.accuracy(y[:3], y)


def test_multiclass_joint_fit(rng):
    X = rng.standard_normal((12, 3))
    labels = rng.integers(0, 3, 12)
    T = regress.one_hot(labels, 3)
    assert T.shape == (12, 3) and np.all(T.sum(1) == 1)
    K = expected_k2_matrix(X)
    m = regress.fit(K, T)
    assert m.multiclass and m.alpha.shape == (12, 3)
    for c in range(3):
        np.testing.assert_allclose(m.alpha[:, c], regress.fit(K, T[:, c]).alpha, atol=1e-10)
    assert regress.accuracy(regress.decide(regress.predict(m, K)), labels) == 1.0


def test_input_validation(rng):
    with pytest.raises(ValueError):
        regress.fit(rng.standard_normal((3, 3)), np.ones(3))
    with pytest.raises(ValueError):
        regress.fit(np.eye(3), np.ones(2))
    with pytest.raises(ValueError):
        regress.fit(np.eye(3), np.ones(3), ridge=-1.0)


def test_indefinite_solve(rng):
    A = rng.standard_normal((6, 6))
    K = A + A.T
    y = rng.standard_normal(6)
    with pytest.raises(regress.NotPositiveDefinite):
        regress.fit(K, y, ridge=0.0)
    m = regress.fit(K, y, ridge=0.0, indefinite=True)
    np.testing.assert_allclose(K @ m.alpha, y, atol=1e-8)


@given(st.integers(0, 2 ** 31), st.floats(0.01, 100.0))
def test_joint_rescaling_invariance(seed, c):
    rng = np.random.default_rng(seed)
    X, Xt = rng.standard_normal((10, 3)), rng.standard_normal((5, 3))
    y = np.sign(rng.standard_normal(10))
    K, Kc = expected_k2_matrix(X), expected_k2_matrix(Xt, X)
    a = regress.decide(regress.predict(regress.fit(K, y, ridge=0.1), Kc))
    b = regress.decide(regress.predict(regress.fit(c * K, y, ridge=0.1 * c), c * Kc))
    np.testing.assert_array_equal(a, b)


def test_oracle_label_aware_kernel_training_accuracy():
    wins = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        X, y = two_clusters(40, ClusterSpec(d=5, sep=0.5), rng)
        K = expected_k2_matrix(X)
        ridge = 0.5 * np.trace(K) / len(y)
        base = regress.accuracy(regress.decide(regress.predict(regress.fit(K, y, ridge), K)), y)
        H = K + 0.1 * np.outer(y, y)
        aware = regress.accuracy(regress.decide(regress.predict(regress.fit(H, y, ridge), H)), y)
        wins += aware >= base
    assert wins >= 48
