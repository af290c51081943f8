import logging
import math

import numpy as np
import pytest

from fourier_shap import (KernelOperator, KernelRecursionError, ParameterError, ProductMeasure,
                          SchemaError, SpectrumError, TailStatistics, TensorBasis,
                          expected_residual_trace, expected_shap_bound, finite_width_bound,
                          gaussian_expectation, gaussian_w2, high_probability_bound,
                          kl_coefficients, kl_sample, laurent_massart_thresholds,
                          moment_matched_epsilon, nngp_gram, nngp_kernel)
from fourier_shap.gp import (ReadoutNetwork, _repair_psd, analyze, encode_states,
                             estimate_epsilon, kernel_from_spec, residual_energy, sample_values,
                             shap_gaps, synthesize, tail_statistics, tail_weights_sq)

from conftest import random_basis


def _basis4():
    return TensorBasis(ProductMeasure(([0.3, 0.7], [0.6, 0.4])))


def test_zero_spectrum_gives_zero_function():
    K = KernelOperator.from_spectrum(_basis4(), np.zeros(4))
    assert np.all(kl_sample(K, seed=0).values == 0)


def test_single_mode_variance():
    b = _basis4()
    K = KernelOperator.from_spectrum(b, {(1, 1): 1.0})
    vals = synthesize(b, kl_coefficients(K, 10_000, seed=1))
    c = analyze(b, vals)[:, 3]  # (1, 1) is the last index in dense order
    se = np.sqrt(2.0 / len(c))
    assert abs(np.mean(c ** 2) - 1.0) < 3 * se
    np.testing.assert_allclose(analyze(b, vals)[:, :3], 0.0, atol=1e-12)


def test_identity_operator_energy():
    b = _basis4()
    K = KernelOperator.from_spectrum(b, np.ones(4))
    e = residual_energy(K, sample_values(K, 10_000, seed=2), lambda k, s: False)
    assert abs(e.mean() - 4.0) < 3 * e.std(ddof=1) / math.sqrt(len(e))


def test_residual_trace_examples():
    b = _basis4()
    ident = KernelOperator.from_spectrum(b, np.ones(4))
    assert expected_residual_trace(ident, lambda k, s: True) == 0.0
    assert expected_residual_trace(ident, [(0, 0), (1, 1)]) == pytest.approx(2.0)
    K = KernelOperator.from_spectrum(b, [1.0, 0.5, 0.25, 0.125])
    assert expected_residual_trace(K, "top=2") == pytest.approx(0.375)
    e = residual_energy(K, sample_values(K, 10_000, seed=3), "top=2")
    assert abs(e.mean() - 0.375) < 3 * e.std(ddof=1) / math.sqrt(len(e))


def test_operator_action_on_atoms(rng):
    b = random_basis(rng, (2, 3))
    s = rng.uniform(0, 2, size=6)
    K = KernelOperator.from_spectrum(b, s)
    again = KernelOperator.from_matrix(b, K.matrix)
    assert again.diagonal_in_basis
    np.testing.assert_allclose(again.spectrum, s, atol=1e-10)
    for j, k in enumerate(b.space.states()):
        psi = b.atom_table(k)
        assert np.linalg.norm(K.apply(psi) - s[j] * psi) <= 1e-8


def test_non_diagonal_kernel(rng):
    b = random_basis(rng, (2, 3))
    A = rng.normal(size=(6, 6))
    K = KernelOperator.from_matrix(b, A @ A.T)
    assert not K.diagonal_in_basis
    with pytest.raises(SpectrumError):
        K.require_diagonal()
    with pytest.raises(SpectrumError):
        kl_sample(K, 0)
    assert expected_residual_trace(K, "order<=0") == pytest.approx(
        np.trace(K.coefficient_covariance()) - K.coefficient_covariance()[0, 0])


def test_kernel_validation(rng):
    b = _basis4()
    with pytest.raises(SpectrumError):
        KernelOperator.from_spectrum(b, [1, -1, 0, 0])
    with pytest.raises(SpectrumError):
        KernelOperator.from_spectrum(b, [1, 1, 1])
    with pytest.raises(ParameterError):
        KernelOperator.from_matrix(b, -np.eye(4))
    with pytest.raises(ParameterError):
        KernelOperator.from_matrix(b, np.triu(np.ones((4, 4))))


def test_expected_bound_examples():
    b = TensorBasis(ProductMeasure.uniform((2, 2)))
    K = KernelOperator.from_spectrum(b, {(0, 0): 1.0, (1, 0): 1.0})
    assert expected_shap_bound(K, "order<=1", 0, (1, 1)) == 0.0
    K = KernelOperator.from_spectrum(b, {(1, 1): 1.0})
    bound = expected_shap_bound(K, "order<=1", 0, (1, 1))
    assert bound == pytest.approx(0.5)
    c = kl_coefficients(K, 20_000, seed=4)
    keep = np.array([True, True, True, False])
    gaps = np.abs(shap_gaps(b, c, keep, 0, (1, 1)))
    assert gaps.mean() == pytest.approx(math.sqrt(2 / math.pi) * 0.5, rel=0.03)
    assert gaps.mean() <= bound


def test_expected_bound_random_spectra(rng):
    b = TensorBasis(ProductMeasure.random((2, 2, 2, 2), rng))
    for trial in range(5):
        K = KernelOperator.from_spectrum(b, rng.exponential(size=16))
        keep = np.count_nonzero(b.space.states(), axis=1) <= 1
        x = tuple(rng.integers(0, 2, size=4))
        i = int(rng.integers(4))
        gaps = np.abs(shap_gaps(b, kl_coefficients(K, 10_000, trial), keep, i, x))
        assert gaps.mean() <= expected_shap_bound(K, "order<=1", i, x)


def test_high_probability_examples():
    assert high_probability_bound(TailStatistics(0, 0, 0), 1.0, 0.05) == 0.0
    t = math.log(40)
    expect = math.sqrt(1.5 + 2 * math.sqrt(1.25 * t) + 2 * t)
    assert high_probability_bound(TailStatistics(1.5, 1.25, 1.0), 1.0, 0.05) == pytest.approx(
        expect, abs=1e-12)
    assert expect == pytest.approx(3.6294, abs=1e-4)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ParameterError):
            high_probability_bound(TailStatistics(1, 1, 1), 1.0, bad)


def test_tail_statistics_and_weights():
    b = TensorBasis(ProductMeasure.uniform((2, 2)))
    K = KernelOperator.from_spectrum(b, [1.0, 0.5, 0.25, 0.125])
    tail = tail_statistics(K, "order<=1")
    assert (tail.sum1, tail.sum2, tail.smax) == (0.125, 0.125 ** 2, 0.125)
    keep = np.array([True, True, True, False])
    assert tail_weights_sq(b, keep, 0, (0, 1)) == pytest.approx(0.25)


def test_laurent_massart_thresholds():
    up, low = laurent_massart_thresholds([1.0, 1.0], 1.0)
    assert up == pytest.approx(2 * math.sqrt(2) + 2)
    assert low == pytest.approx(2 * math.sqrt(2))
    with pytest.raises(ParameterError):
        laurent_massart_thresholds([-1.0], 1.0)


def test_relu_diagonal_and_collapse():
    G = np.array([[2.0, 0.5], [0.5, 1.0]])
    K = nngp_gram(G, 1, sigma_w2=1.5, sigma_b2=0.2)
    np.testing.assert_allclose(np.diag(K), 0.2 + 1.5 * np.diag(G) / 2, atol=1e-14)
    np.testing.assert_array_equal(nngp_gram(G, 3, 0.0, 0.7), np.full((2, 2), 0.7))


def test_erf_closed_form_matches_monte_carlo(rng):
    A = rng.normal(size=(3, 3))
    G = A @ A.T / 3
    E, se = gaussian_expectation(G, "erf", "monte_carlo", mc_samples=200_000, seed=5,
                                 return_se=True)
    assert np.all(np.abs(E - gaussian_expectation(G, "erf")) <= 4 * se + 1e-12)


def test_psd_repair_policy(caplog):
    vals = np.array([-1e-8, 1.0, 2.0])
    Q = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))[0]
    K = (Q * vals) @ Q.T
    with caplog.at_level(logging.WARNING):
        fixed = _repair_psd(K, 1)
    assert np.linalg.eigvalsh(fixed)[0] >= -1e-14
    assert "clipped" in caplog.text
    vals[0] = -1e-3
    with pytest.raises(KernelRecursionError):
        _repair_psd((Q * vals) @ Q.T, 2)


def test_nngp_kernel_on_uniform_binary_is_diagonal():
    b = TensorBasis(ProductMeasure.uniform((2, 2, 2)))
    K = nngp_kernel(b, depth=2, sigma_w2=2.0, sigma_b2=0.1, encoding="pm1")
    assert K.diagonal_in_basis
    assert np.all(K.spectrum >= 0)


def test_encodings_have_unit_norm():
    b = TensorBasis(ProductMeasure.uniform((2, 3)))
    for enc in ("onehot", "ordinal"):
        E = encode_states(b, enc)
        assert E.shape[0] == 6
    np.testing.assert_allclose(np.sum(encode_states(b, "onehot") ** 2, axis=1), 1.0)
    with pytest.raises(ParameterError):
        encode_states(b, "pm1")


def test_gaussian_w2_examples(rng):
    A = rng.normal(size=(4, 4))
    A = A @ A.T
    assert gaussian_w2(A, A) == pytest.approx(0.0, abs=1e-6)
    for d in (1, 3, 5):
        assert gaussian_w2(4 * np.eye(d), np.eye(d)) == pytest.approx(math.sqrt(d), abs=1e-12)
    a, c = rng.uniform(0.1, 3, size=(2, 4))
    assert gaussian_w2(np.diag(a), np.diag(c)) ** 2 == pytest.approx(
        np.sum((np.sqrt(a) - np.sqrt(c)) ** 2), abs=1e-12)
    with pytest.raises(ParameterError):
        gaussian_w2(-np.eye(2), np.eye(2))


def test_finite_width_bound_examples(rng):
    assert finite_width_bound(1.0, 0.25, 0.1) == pytest.approx(0.6)
    b = TensorBasis(ProductMeasure.uniform((2, 2)))
    K = KernelOperator.from_spectrum(b, [1.0, 0.5, 0.25, 0.125])
    keep = np.array([True, True, True, False])
    wsq = tail_weights_sq(b, keep, 0, (1, 1))
    assert finite_width_bound(wsq, 0.125, 0.0) == pytest.approx(
        expected_shap_bound(K, "order<=1", 0, (1, 1)))
    for _ in range(100):
        w, s, e = rng.uniform(0, 2, size=3)
        assert finite_width_bound(w, s, 2 * e) >= finite_width_bound(w, s, e)
    with pytest.raises(ParameterError):
        finite_width_bound(1.0, -0.1, 0.0)


def test_width_estimates():
    b = TensorBasis(ProductMeasure.uniform((2, 2, 2)))
    E = encode_states(b, "pm1")
    w = b.measure.weights()
    eps = [estimate_epsilon(ReadoutNetwork(E, N), w, 30, seed=0) for N in (4, 64)]
    assert eps[1] < eps[0]
    net = ReadoutNetwork(E, 4096)
    K = net.limit_kernel()
    rng = np.random.default_rng(1)
    root = np.linalg.cholesky(K + 1e-12 * np.eye(8))
    exact = rng.standard_normal((200_000, 8)) @ root.T
    assert moment_matched_epsilon(exact, K, w) < 0.02


def test_kernel_spec_recipes(rng):
    space = {"cardinalities": [2, 2], "measures": [[0.5, 0.5], [0.5, 0.5]]}
    K = kernel_from_spec({**space, "kernel": {"type": "spectrum", "spectrum": [1, 2, 3, 4]}})
    np.testing.assert_array_equal(K.spectrum, [1, 2, 3, 4])
    K2 = kernel_from_spec({**space, "kernel": {"type": "matrix", "matrix": K.matrix.tolist()}})
    np.testing.assert_allclose(K2.spectrum, [1, 2, 3, 4], atol=1e-10)
    K3 = kernel_from_spec({**space, "kernel": {"type": "nngp", "depth": 1, "sigma_w2": 1.0,
                                               "sigma_b2": 0.0}})
    assert K3.matrix.shape == (4, 4)
    with pytest.raises(SchemaError):
        kernel_from_spec({**space, "kernel": {"type": "rbf"}})
    with pytest.raises(SchemaError):
        kernel_from_spec({**space, "kernel": {"type": "nngp", "depth": 1, "sigma_w2": 1,
                                              "sigma_b2": 0, "width": 3}})
