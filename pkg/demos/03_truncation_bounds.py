"""How much can dropping high-order atoms move an attribution?

Run: python3 demos/03_truncation_bounds.py
"""
import numpy as np

from fourier_shap import (ProductMeasure, TensorBasis, fourier_shap, random_sparse_model,
                          truncate, truncation_bound)

rng = np.random.default_rng(3)
basis = TensorBasis(ProductMeasure.random((2, 3, 2, 3, 2), rng))
model = random_sparse_model(basis, 60, rng)
x = np.array([1, 2, 0, 1, 1])
full = fourier_shap(model, x).phi

for sel in ("order<=1", "order<=2", "order<=3", "top=20", "abs>=0.5"):
    kept, resid = truncate(model, sel)
    approx = fourier_shap(kept, x).phi
    gaps = np.abs(full - approx)
    bounds = np.array([truncation_bound(model, sel, i, x) for i in range(5)])
    print(f"{sel:>10}: keeps {len(kept):2d}/{len(model)} atoms, residual norm {resid:.3f}")
    ratio = np.max(gaps / np.maximum(bounds, 1e-300))
    print(f"            worst gap {gaps.max():.4f}, largest gap/bound ratio {ratio:.3f}")
