"""Per-instance cost of closed-form attributions versus sampled regression.

Run: python3 demos/07_benchmark.py
"""
import numpy as np

from fourier_shap import ProductMeasure, TensorBasis, random_sparse_model
from fourier_shap.pipeline import benchmark

rng = np.random.default_rng(7)
basis = TensorBasis(ProductMeasure.random((2, 2, 2, 2, 3, 2, 4, 4, 4), rng))
X = np.array([[rng.integers(m) for m in basis.space.cardinalities] for _ in range(5)])
for n_atoms in (100, 400):
    model = random_sparse_model(basis, n_atoms, rng, max_order=3)
    for row in benchmark(model, X, ("fourier", "kernel"), kernel_budget=128, reps=10,
                         warmup=3):
        print(f"{n_atoms:4d} atoms  {row.method:<8} median {row.median_time_s * 1e3:9.3f} ms  "
              f"peak alloc {row.peak_mem_estimate / 1024:8.1f} KiB  speedup {row.speedup:9.1f}x")
