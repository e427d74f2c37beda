import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import hadamard

from lantk.sketch import fwht, make_fjlt, next_pow2


def test_first_basis_vector():
    assert fwht([1, 0, 0, 0]).tolist() == [1, 1, 1, 1]


def test_matches_dense_hadamard(rng):
    v = rng.standard_normal(32)
    np.testing.assert_allclose(fwht(v), hadamard(32) @ v, atol=1e-12)


@given(st.integers(0, 8).flatmap(lambda k: arrays(np.float64, 2 ** k, elements=st.floats(-1e3, 1e3))))
def test_involution_and_norm(v):
    N = len(v)
    np.testing.assert_allclose(fwht(fwht(v)), N * v, atol=1e-9 * max(1.0, np.abs(v).max()) * N)
    assert np.isclose(np.linalg.norm(fwht(v)), np.sqrt(N) * np.linalg.norm(v), rtol=1e-12, atol=1e-9)


def test_rejects_non_power_of_two():
    with pytest.raises(ValueError, match="power of two"):
        fwht(np.ones(6))


def test_columns_transform_independently(rng):
    A = rng.standard_normal((16, 3))
    out = fwht(A)
    for k in range(3):
        np.testing.assert_allclose(out[:, k], fwht(A[:, k]))


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 5, 1024, 1025)] == [1, 2, 4, 8, 1024, 2048]


def test_sketch_unbiased_in_squared_norm(rng):
    v = rng.standard_normal(300)
    est = np.mean([np.linalg.norm(make_fjlt(300, 64, s).apply(v)) ** 2 for s in range(400)])
    assert abs(est / np.linalg.norm(v) ** 2 - 1) < 0.05


def test_sketch_is_deterministic_given_seed(rng):
    v = rng.standard_normal(100)
    np.testing.assert_array_equal(make_fjlt(100, 32, 7).apply(v), make_fjlt(100, 32, 7).apply(v))


def test_sketch_validates_dims():
    with pytest.raises(ValueError):
        make_fjlt(100, 200)
    with pytest.raises(ValueError):
        make_fjlt(100, 32).apply(np.ones(99))
