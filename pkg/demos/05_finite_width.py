"""Finite networks are not exactly Gaussian; the bound pays for the difference.

Run: python3 demos/05_finite_width.py
"""
import numpy as np

from fourier_shap import (KernelOperator, ProductMeasure, TensorBasis, finite_width_bound,
                          gaussian_w2)
from fourier_shap.gp import (ReadoutNetwork, analyze, encode_states, estimate_epsilon,
                             shap_gaps, tail_statistics, tail_weights_sq)

basis = TensorBasis(ProductMeasure.uniform((2, 2, 2)))
E = encode_states(basis, "pm1")
w = basis.measure.weights()
print("W2 between N(0, 4I) and N(0, I) in 3 dims:", gaussian_w2(4 * np.eye(3), np.eye(3)))

x, i = (1, 1, 0), 0
for width in (8, 32, 128, 512):
    net = ReadoutNetwork(E, width, sigma_w2=2.0, sigma_b2=0.1)
    Kinf = KernelOperator.from_matrix(basis, net.limit_kernel())
    keep = np.count_nonzero(basis.space.states(), axis=1) <= 1
    eps = estimate_epsilon(net, w, 50, seed=0)
    rng = np.random.default_rng(width)
    tables = np.concatenate([net.sample(net.hidden(rng), rng, 20) for _ in range(200)])
    gap = np.abs(shap_gaps(basis, analyze(basis, tables), keep, i, x)).mean()
    bound = finite_width_bound(tail_weights_sq(basis, keep, i, x),
                               tail_statistics(Kinf, "order<=1").sum1, eps)
    print(f"width {width:4d}: eps {eps:.4f}, mean gap {gap:.4f}, bound {bound:.4f}")
