"""Attribution error of truncation when the predictor is a Gaussian-process draw.

Run: python3 demos/04_gp_bounds.py
"""
import numpy as np

from fourier_shap import (ProductMeasure, TensorBasis, expected_residual_trace,
                          expected_shap_bound, high_probability_bound, kl_coefficients,
                          nngp_kernel)
from fourier_shap.gp import (residual_energy, sample_values, shap_gaps, tail_statistics,
                             tail_weights_sq)

# An infinitely wide ReLU network prior on three fair binary inputs is
# diagonal in the basis, so random predictors can be drawn spectrum-first.
basis = TensorBasis(ProductMeasure.uniform((2, 2, 2)))
K = nngp_kernel(basis, depth=2, sigma_w2=2.0, sigma_b2=0.1, encoding="pm1")
print("diagonal in basis:", K.diagonal_in_basis)
for k, s in zip(basis.space.states(), K.spectrum):
    print(f"  k={tuple(int(v) for v in k)}  variance {s:.4f}")

sel = "order<=1"
trace = expected_residual_trace(K, sel)
energy = residual_energy(K, sample_values(K, 20_000, seed=0), sel)
print(f"\nexpected energy discarded by {sel}: {trace:.4f} "
      f"(Monte Carlo {energy.mean():.4f} +/- {energy.std() / np.sqrt(len(energy)):.4f})")

keep = np.count_nonzero(basis.space.states(), axis=1) <= 1
x = (1, 0, 1)
coefs = kl_coefficients(K, 100_000, seed=1)
tail = tail_statistics(K, sel)
for i in range(3):
    gaps = np.abs(shap_gaps(basis, coefs, keep, i, x))
    wsq = tail_weights_sq(basis, keep, i, x)
    hp = high_probability_bound(tail, wsq, 0.05)
    print(f"feature {i}: mean gap {gaps.mean():.4f} <= {expected_shap_bound(K, sel, i, x):.4f}; "
          f"95% quantile {np.quantile(gaps, 0.95):.4f} <= {hp:.4f}")
