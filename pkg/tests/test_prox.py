import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from tubal.errors import InvalidRankTarget
from tubal.prox import ProxParams, psvt_matrix, psvt_singular_values, pstnn_prox_tensor, soft_threshold
from tubal.t_algebra import fourier_singular_values, pstnn
from tubal.tensor_core import fft_mode3


def partial_sum(m, n):
    s = scipy.linalg.svd(m, compute_uv=False, lapack_driver="gesvd")
    return float(s[n:].sum())


def matrix_objective(x, y, n, tau):
    return tau * partial_sum(x, n) + 0.5 * np.linalg.norm(x - y) ** 2


def tensor_objective(x, b, n, tau):
    # per-slice thresholding by tau minimizes tau * sum_k ||Xf_k||_{p=N} + n3/2 ||X - B||_F^2
    return tau / b.shape[2] * pstnn(x, n) + 0.5 * np.linalg.norm(x - b) ** 2


def test_soft_threshold():
    np.testing.assert_array_equal(soft_threshold(np.array([3.0, -3.0, 0.5, -0.5, 1.0]), 1.0), [2, -2, 0, 0, 0])
    with pytest.raises(ValueError):
        soft_threshold(np.ones(2), -1.0)


@pytest.mark.parametrize(
    "n, tau, expected",
    [(1, 2.0, [5, 1, 0]), (0, 2.0, [3, 1, 0]), (2, 2.0, [5, 3, 0]), (3, 2.0, [5, 3, 1]), (1, 10.0, [5, 0, 0])],
)
def test_psvt_diagonal(n, tau, expected):
    y = np.diag([5.0, 3.0, 1.0])
    np.testing.assert_allclose(psvt_matrix(y, n, tau), np.diag(expected), atol=1e-14)


def test_psvt_singular_value_rule():
    s = np.array([[4.0, 2.0, 1.0], [6.0, 5.0, 0.5]])
    out = psvt_singular_values(s, np.array([0, 2]), 1.5)
    np.testing.assert_allclose(out, [[2.5, 0.5, 0.0], [6.0, 5.0, 0.0]])


def test_psvt_with_zero_keep_is_svt(rng):
    y = rng.standard_normal((6, 4))
    u, s, vh = np.linalg.svd(y, full_matrices=False)
    np.testing.assert_allclose(psvt_matrix(y, 0, 0.7), (u * np.maximum(s - 0.7, 0)) @ vh, atol=1e-12)


def test_psvt_rejects_bad_arguments(rng):
    y = rng.standard_normal((3, 4))
    with pytest.raises(InvalidRankTarget):
        psvt_matrix(y, 4, 1.0)
    with pytest.raises(ValueError):
        psvt_matrix(y, 1, 0.0)


@pytest.mark.parametrize("complex_input", [False, True])
@pytest.mark.parametrize("n", [0, 1, 3])
def test_psvt_is_a_minimizer(rng, n, complex_input):
    y = rng.standard_normal((6, 5))
    if complex_input:
        y = y + 1j * rng.standard_normal((6, 5))
    tau = 0.8
    x = psvt_matrix(y, n, tau)
    best = matrix_objective(x, y, n, tau)
    for scale in (1e-4, 1e-2, 1.0):
        for _ in range(300):
            d = rng.standard_normal(y.shape)
            if complex_input:
                d = d + 1j * rng.standard_normal(y.shape)
            assert best <= matrix_objective(x + scale * d, y, n, tau) + 1e-12


def test_psvt_matches_per_singular_value_oracle(rng):
    y = rng.standard_normal((5, 7))
    u, s, vh = scipy.linalg.svd(y, full_matrices=False, lapack_driver="gesvd")
    n, tau = 2, 0.5
    s_new = np.array([v if i < n else max(v - tau, 0.0) for i, v in enumerate(s)])
    np.testing.assert_allclose(psvt_matrix(y, n, tau), u @ np.diag(s_new) @ vh, atol=1e-12)


def test_prox_params_validation():
    with pytest.raises(ValueError):
        ProxParams(tau=0)
    with pytest.raises(ValueError):
        ProxParams(tau=-1.0)


def test_tensor_prox_equals_per_slice_psvt(rng):
    b = rng.standard_normal((5, 4, 6))
    out = pstnn_prox_tensor(b, ProxParams(tau=1.3, n_target=2))
    bf, of = fft_mode3(b), fft_mode3(out)
    for k in range(6):
        np.testing.assert_allclose(of[:, :, k], psvt_matrix(bf[:, :, k], 2, 1.3), atol=1e-10)
    assert out.dtype == np.float64


def test_tensor_prox_with_zero_keep_is_tensor_svt(rng):
    b = rng.standard_normal((4, 5, 5))
    out = pstnn_prox_tensor(b, ProxParams(tau=0.9))
    sv = fourier_singular_values(out)
    expected = np.maximum(fourier_singular_values(b) - 0.9, 0)
    np.testing.assert_allclose(sv, expected, atol=1e-10)


def test_tensor_prox_keeps_everything_with_full_keep(rng):
    b = rng.standard_normal((4, 3, 5))
    np.testing.assert_allclose(pstnn_prox_tensor(b, ProxParams(tau=5.0, n_target=3)), b, atol=1e-12)


def test_tensor_prox_decouples_slices(rng):
    # a tensor constant along mode 3 has a single nonzero Fourier slice (k = 0)
    m = rng.standard_normal((4, 4))
    b = np.repeat(m[:, :, np.newaxis], 6, axis=2)
    out = pstnn_prox_tensor(b, ProxParams(tau=2.0, n_target=1))
    expected = psvt_matrix(6 * m, 1, 2.0) / 6
    for k in range(6):
        np.testing.assert_allclose(out[:, :, k], expected, atol=1e-12)


def test_tensor_prox_is_idempotent_with_zero_threshold_tail(rng):
    b = rng.standard_normal((5, 5, 4))
    p = ProxParams(tau=100.0, n_target=2)
    once = pstnn_prox_tensor(b, p)
    np.testing.assert_allclose(pstnn_prox_tensor(once, p), once, atol=1e-10)


def test_tensor_prox_rejects_asymmetric_targets(rng):
    with pytest.raises(InvalidRankTarget):
        pstnn_prox_tensor(rng.standard_normal((3, 3, 4)), ProxParams(tau=1.0, n_target=[1, 2, 3, 1]))


def test_tensor_prox_per_slice_targets(rng):
    b = rng.standard_normal((4, 4, 5))
    n = [3, 1, 2, 2, 1]
    out = pstnn_prox_tensor(b, ProxParams(tau=0.4, n_target=n))
    bf, of = fft_mode3(b), fft_mode3(out)
    for k in range(5):
        np.testing.assert_allclose(of[:, :, k], psvt_matrix(bf[:, :, k], n[k], 0.4), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 3), st.sampled_from([1, 2, 3, 4, 7]))
def test_tensor_prox_minimizes_sampled_objective(seed, n, n3):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((4, 3, n3))
    tau = float(rng.uniform(0.1, 2.0))
    x = pstnn_prox_tensor(b, ProxParams(tau=tau, n_target=n))
    best = tensor_objective(x, b, n, tau)
    for scale in (1e-3, 1e-1):
        for _ in range(20):
            d = rng.standard_normal(b.shape)
            assert best <= tensor_objective(x + scale * d, b, n, tau) + 1e-10
