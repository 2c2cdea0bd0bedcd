import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prfsnn.seqcore import (
    DecayKernel,
    SequenceBatch,
    as_sequence,
    build_lif_kernel,
    build_prf_kernel,
    causal_convolve,
    fft_length,
    naive_convolve,
)


def lane(x):
    return np.asarray(x.data if isinstance(x, SequenceBatch) else x)[:, 0, 0]


def test_sequence_batch_validation():
    with pytest.raises(ValueError):
        SequenceBatch(np.zeros((3, 2)), "current")
    with pytest.raises(ValueError):
        SequenceBatch(np.zeros((0, 1, 1)), "current")
    with pytest.raises(ValueError):
        SequenceBatch(np.zeros((3, 1, 1)), "voltage")
    assert as_sequence([1.0, 2.0]).shape == (2, 1, 1)
    assert as_sequence(np.ones((4, 3))).shape == (4, 1, 3)


def test_lif_kernel_examples():
    np.testing.assert_array_equal(build_lif_kernel(0.5, 3).values[:, 0], [1.0, 0.5, 0.25])
    # running-product oracle, evaluated by hand
    np.testing.assert_allclose(build_lif_kernel(0.9, 5).values[:, 0], [1, 0.9, 0.81, 0.729, 0.6561], rtol=1e-15)
    tau = 1.0 + 1e-6
    k = build_lif_kernel(1 - 1 / tau, 3).values[:, 0]
    np.testing.assert_allclose(k, [1, 0, 0], atol=1e-5)


def test_lif_kernel_is_running_product():
    beta = np.array([0.3, 0.77, 0.999])
    k = build_lif_kernel(beta, 200).values
    ref = np.ones(3)
    for t in range(200):
        np.testing.assert_array_equal(k[t], ref)
        ref = ref * beta


@pytest.mark.parametrize("beta", [0.0, 1.0, -0.2, 1.5])
def test_lif_kernel_rejects_bad_beta(beta):
    with pytest.raises(ValueError):
        build_lif_kernel(beta, 4)


def test_prf_kernel_examples():
    k = build_prf_kernel(1.0, 2.0, 0.0, 3).values[:, 0]
    np.testing.assert_allclose(k, [1, math.exp(-0.5), math.exp(-1)], rtol=1e-15)
    assert np.all(k.imag == 0)
    k = build_prf_kernel(1.0, 2.0, math.pi / 2, 3).values[:, 0]
    np.testing.assert_allclose(k, [1, 0.60653066j, -0.36787944], atol=1e-8)


def test_prf_kernel_theta_zero_is_scaled_lif_kernel():
    tau, delta = 3.0, 1.0
    prf = build_prf_kernel(delta, tau, 0.0, 50).values[:, 0]
    lif = build_lif_kernel(math.exp(-1 / tau), 50).values[:, 0]
    np.testing.assert_allclose(prf.real, delta * lif, rtol=1e-13)


@pytest.mark.parametrize("delta,tau", [(1.0, 1.0), (1.0, 0.5), (0.0, 2.0), (-1.0, 2.0)])
def test_prf_kernel_rejects_divergent(delta, tau):
    with pytest.raises(ValueError):
        build_prf_kernel(delta, tau, 0.1, 4)


def test_fft_length_is_power_of_two_covering_linear_convolution():
    for T in range(1, 300):
        n = fft_length(T)
        assert n >= 2 * T - 1 and n & (n - 1) == 0
        assert n // 2 < max(2 * T - 1, 1) or n == 1


@pytest.mark.parametrize(
    "x,expected",
    [([2.0, 0.0, 0.0], [2.0, 1.0, 0.5]), ([1.0, 1.0, 1.0], [1.0, 1.5, 1.75])],
)
def test_convolve_examples(x, expected):
    k = build_lif_kernel(0.5, 3)
    np.testing.assert_allclose(lane(causal_convolve(x, k)), expected, rtol=1e-12)
    np.testing.assert_allclose(lane(naive_convolve(x, k)), expected, rtol=1e-12)


def test_impulse_reproduces_kernel():
    k = build_prf_kernel([0.3, 1.0], [5.0, 40.0], [0.2, 2.0], 64)
    x = np.zeros((64, 1, 2))
    x[0] = 1.0
    out = causal_convolve(x, k).data[:, 0, :]
    np.testing.assert_allclose(out, k.values, atol=1e-14)


def test_shape_mismatch():
    k = build_lif_kernel(0.5, 4)
    with pytest.raises(ValueError):
        causal_convolve(np.zeros((5, 1, 1)), k)
    with pytest.raises(ValueError):
        causal_convolve(np.zeros((4, 1, 3)), DecayKernel(np.ones((4, 2))))
    with pytest.raises(ValueError):
        naive_convolve(np.zeros((5, 1, 1)), k)


@settings(max_examples=40, deadline=None)
@given(
    T=st.integers(1, 512),
    B=st.integers(1, 3),
    N=st.integers(1, 4),
    seed=st.integers(0, 2**32 - 1),
    complex_kernel=st.booleans(),
)
def test_fft_matches_naive(T, B, N, seed, complex_kernel):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((T, B, N))
    if complex_kernel:
        k = build_prf_kernel(rng.uniform(0.01, 1, N), rng.uniform(1.5, 80, N), rng.uniform(0, np.pi, N), T)
    else:
        k = build_lif_kernel(rng.uniform(0.05, 0.99, N), T)
    fast = causal_convolve(x, k).data
    slow = naive_convolve(x, k).data
    assert np.abs(fast - slow).max() <= 1e-9 * np.abs(slow).max()


@settings(max_examples=30, deadline=None)
@given(T=st.integers(2, 128), cut=st.integers(0, 126), seed=st.integers(0, 2**32 - 1))
def test_causality(T, cut, seed):
    cut = cut % (T - 1)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((T, 2, 3))
    k = build_prf_kernel(0.5, 10.0, [0.0, 1.0, 2.5], T)
    y0 = causal_convolve(x, k).data
    x2 = x.copy()
    x2[cut + 1 :] += rng.standard_normal(x2[cut + 1 :].shape)
    y1 = causal_convolve(x2, k).data
    np.testing.assert_allclose(y1[: cut + 1], y0[: cut + 1], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    delta=st.floats(0.01, 2.0),
    ratio=st.floats(1.05, 200.0),
    theta=st.floats(-math.pi, math.pi),
)
def test_prf_kernel_geometric_decay(delta, ratio, theta):
    tau = delta * ratio
    k = build_prf_kernel(delta, tau, theta, 40).values[:, 0]
    ratios = np.abs(k[1:]) / np.abs(k[:-1])
    np.testing.assert_allclose(ratios, math.exp(-delta / tau), rtol=1e-12)


def test_convolution_deterministic_across_calls():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((300, 4, 5))
    k = build_prf_kernel(0.2, 5.0, 1.0, 300)
    a = causal_convolve(x, k).data
    b = causal_convolve(x.copy(), k).data
    assert np.array_equal(a, b)
