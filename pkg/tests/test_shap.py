from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fourier_shap import (CoalitionLimitError, DenseLimitError, KernelShapDegenerateError,
                          ParameterError, ProductMeasure, SparseFourierModel, TensorBasis,
                          brute_force_shap, coalition_value, forward_transform, fourier_shap,
                          frequency_weights, kernel_shap, random_sparse_model, shapley_weights,
                          truncate, truncation_bound)
from fourier_shap.shap import all_coalition_values

from conftest import random_basis, random_model, xy_table

UNIFORM2 = ProductMeasure.uniform((2, 2))


def test_coalition_values_hand_example():
    h = xy_table()
    x = (1, 1)
    assert coalition_value(h, [0, 1], x, UNIFORM2) == pytest.approx(4.0)
    assert coalition_value(h, [0], x, UNIFORM2) == pytest.approx(2.5)
    assert coalition_value(h, [1], x, UNIFORM2) == pytest.approx(3.0)
    assert coalition_value(h, [], x, UNIFORM2) == pytest.approx(1.75)


def test_all_coalition_values_match_single(rng):
    m = random_model(rng, (2, 3, 2, 3), 20)
    x = (1, 2, 0, 1)
    v = all_coalition_values(m, x, m.basis.measure)
    for mask in range(16):
        S = [i for i in range(4) if mask >> i & 1]
        assert v[mask] == pytest.approx(coalition_value(m, S, x, m.basis.measure), abs=1e-12)


def test_empty_coalition_is_mean(rng):
    m = random_model(rng, (3, 2, 4), 10)
    assert coalition_value(m, [], (0, 0, 0), m.basis.measure) == pytest.approx(m.constant,
                                                                               abs=1e-12)


def test_brute_force_hand_example():
    att = brute_force_shap(xy_table(), (1, 1), UNIFORM2)
    np.testing.assert_allclose(att.phi, [0.875, 1.375], atol=1e-12)
    assert att.base_value == pytest.approx(1.75)
    assert att.total == pytest.approx(4.0)


def test_fourier_hand_example():
    basis = TensorBasis(UNIFORM2)
    model = forward_transform(xy_table(), basis)
    att = fourier_shap(model, (1, 1))
    np.testing.assert_allclose(att.phi, [0.875, 1.375], atol=1e-12)
    assert att.base_value == pytest.approx(1.75)


def test_single_atom_split_evenly():
    basis = TensorBasis(ProductMeasure.uniform((2, 2, 2)))
    h = basis.atom_table((1, 1, 0))
    for att in (brute_force_shap(h, (1, 1, 0), basis.measure),
                fourier_shap(forward_transform(h, basis), (1, 1, 0))):
        np.testing.assert_allclose(att.phi, [0.5, 0.5, 0.0], atol=1e-12)


def test_single_atom_closed_form(rng):
    basis = random_basis(rng, (3, 2, 4))
    k = (2, 0, 3)
    model = SparseFourierModel.from_dict(basis, {k: -1.7})
    x = (1, 1, 2)
    phi = fourier_shap(model, x).phi
    expect = -1.7 * basis.atom(k, x) / 2
    np.testing.assert_allclose(phi, [expect, 0.0, expect], atol=1e-14)


def test_constant_predictor_has_zero_attribution(rng):
    m = ProductMeasure.random((2, 3), rng)
    att = brute_force_shap(np.full(6, 3.0), (1, 2), m)
    np.testing.assert_allclose(att.phi, 0.0, atol=1e-12)
    for budget in (4, 5, 6):
        np.testing.assert_allclose(kernel_shap(np.full(6, 3.0), (1, 2), m, budget).phi, 0.0,
                                   atol=1e-14)


def test_dummy_feature_exactly_zero(rng):
    basis = random_basis(rng, (2, 3, 3))
    model = SparseFourierModel.from_dict(basis, {(0, 0, 0): 1.0, (1, 0, 2): 0.3, (1, 0, 0): 2.0})
    phi = fourier_shap(model, (1, 2, 1)).phi
    assert phi[1] == 0.0 and not np.signbit(phi[1])


def test_shapley_weights_sum_to_one_per_feature():
    for n in range(1, 9):
        w = shapley_weights(n)
        assert sum(w[s] * comb(n - 1, s) for s in range(n)) == pytest.approx(1.0, abs=1e-14)


def test_brute_force_limits():
    m = ProductMeasure.uniform((2,) * 21)
    with pytest.raises(CoalitionLimitError):
        brute_force_shap(lambda X: X.sum(axis=1), (0,) * 21, m)
    big = ProductMeasure.uniform((4,) * 11)
    with pytest.raises(DenseLimitError):
        coalition_value(lambda X: X.sum(axis=1), [], (0,) * 11, big)


def test_frequency_weight_examples():
    basis = TensorBasis(UNIFORM2)
    model = SparseFourierModel.from_dict(basis, {(1, 1): 1.0, (0, 1): 1.0})
    fw = frequency_weights(model, 0, (0, 1)).as_dict()
    assert fw[(1, 1)] == pytest.approx(0.5)
    assert fw[(0, 1)] == 0.0
    skew = TensorBasis(ProductMeasure(([0.75, 0.25], [0.5, 0.5])))
    fw = frequency_weights(SparseFourierModel.from_dict(skew, {(1, 0): 1.0}), 0, (1, 0))
    assert fw.weights[0] == pytest.approx(np.sqrt(3))


def test_truncation_bound_examples():
    basis = TensorBasis(UNIFORM2)
    model = SparseFourierModel.from_dict(basis, {(1, 0): 1.0, (1, 1): 2.0})
    assert truncation_bound(model, lambda k, c: True, 0, (1, 1)) == 0.0
    bound = truncation_bound(model, "order<=1", 0, (1, 1))
    assert bound == pytest.approx(1.0, abs=1e-12)
    gap = abs(fourier_shap(model, (1, 1)).phi[0]
              - fourier_shap(truncate(model, "order<=1")[0], (1, 1)).phi[0])
    assert gap == pytest.approx(1.0, abs=1e-12)


def test_truncation_bound_full_index_set_dominates(rng):
    m = random_model(rng, (2, 3, 2), 6)
    x = (1, 2, 0)
    for i in range(3):
        assert (truncation_bound(m, "order<=1", i, x, over="all")
                >= truncation_bound(m, "order<=1", i, x) - 1e-12)
    with pytest.raises(ParameterError):
        truncation_bound(m, "order<=1", 0, x, over="some")


def test_kernel_hand_example():
    att = kernel_shap(xy_table(), (1, 1), UNIFORM2, budget=4)
    np.testing.assert_allclose(att.phi, [0.875, 1.375], atol=1e-12)


def test_kernel_exhaustive_matches_brute(rng):
    m = random_model(rng, (2, 3, 4), 15)
    x = (1, 0, 3)
    ref = brute_force_shap(m, x, m.basis.measure).phi
    np.testing.assert_allclose(kernel_shap(m, x, m.basis.measure, 8, seed=3).phi, ref, atol=1e-8)


def test_kernel_efficiency_and_determinism(rng):
    m = random_model(rng, (2, 2, 3, 2, 2, 3), 30)
    x = (1, 0, 2, 1, 0, 1)
    a = kernel_shap(m, x, m.basis.measure, 20, seed=7)
    b = kernel_shap(m, x, m.basis.measure, 20, seed=7)
    np.testing.assert_array_equal(a.phi, b.phi)
    assert a.total == pytest.approx(float(m(np.array([x]))[0]), abs=1e-10)


def test_kernel_budget_errors():
    with pytest.raises(ParameterError):
        kernel_shap(xy_table(), (1, 1), UNIFORM2, budget=3)
    # a single complementary pair cannot identify three features
    h = np.arange(8.0)
    with pytest.raises(KernelShapDegenerateError):
        kernel_shap(h, (1, 1, 1), ProductMeasure.uniform((2, 2, 2)), budget=5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_fourier_equals_brute_force_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    cards = tuple(int(c) for c in rng.integers(2, 4, size=n))
    m = random_model(rng, cards, int(rng.integers(1, 12)))
    x = tuple(int(rng.integers(0, c)) for c in cards)
    f = fourier_shap(m, x)
    b = brute_force_shap(m, x, m.basis.measure)
    np.testing.assert_allclose(f.phi, b.phi, atol=1e-10)
    assert f.base_value == pytest.approx(b.base_value, abs=1e-10)
    assert f.total == pytest.approx(float(m(np.array([x]))[0]), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_linearity_property(seed):
    rng = np.random.default_rng(seed)
    basis = random_basis(rng, (2, 3, 2))
    f = random_sparse_model(basis, 6, rng)
    g = random_sparse_model(basis, 6, rng)
    a, c = rng.normal(size=2)
    combo = forward_transform(a * f.to_dense() + c * g.to_dense(), basis)
    x = (1, 2, 0)
    np.testing.assert_allclose(fourier_shap(combo, x).phi,
                               a * fourier_shap(f, x).phi + c * fourier_shap(g, x).phi,
                               atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_symmetry_property(seed):
    # swapping two identically distributed features swaps their attributions
    rng = np.random.default_rng(seed)
    p = ProductMeasure.random((3,), rng).probs[0]
    measure = ProductMeasure((p, p, [0.4, 0.6]))
    basis = TensorBasis(measure)
    h = rng.normal(size=(3, 3, 2))
    h = h + h.transpose(1, 0, 2)
    x = (int(rng.integers(3)), int(rng.integers(3)), 1)
    phi = fourier_shap(forward_transform(h.ravel(), basis), x).phi
    phi_sw = fourier_shap(forward_transform(h.ravel(), basis), (x[1], x[0], 1)).phi
    np.testing.assert_allclose(phi[[1, 0, 2]], phi_sw, atol=1e-10)
