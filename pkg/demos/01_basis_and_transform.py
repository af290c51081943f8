"""Orthonormal bases for discrete features and the exact spectral transform.

Run: python3 demos/01_basis_and_transform.py
"""
import numpy as np

from fourier_shap import (ProductMeasure, TensorBasis, forward_transform, inner_product,
                          parseval_norm)

# A skewed binary feature: the non-constant basis function must be mean-zero
# and have unit second moment under (3/4, 1/4).
basis = TensorBasis(ProductMeasure(([0.75, 0.25], [0.2, 0.3, 0.5])))
psi = basis.tables[0][1]
print("psi_1 for mu=(3/4,1/4):", np.round(psi, 5))
print("three-state Gram matrix minus identity, max entry:",
      np.abs(basis.coords[1].gram() - np.eye(3)).max())

# Any function on the 2x3 grid has an exact spectrum. Here h counts how far
# each coordinate sits from its first state.
space = basis.space
h = np.array([x0 + 2 * x1 for x0, x1 in space.states()], dtype=float)
model = forward_transform(h, basis)
print("\nspectrum of h(x) = x0 + 2 x1:")
for k, c in model.items():
    print(f"  k={k}  coef={c:+.6f}")

# The spectrum reproduces h exactly and carries its L2(mu) norm.
print("\nmax reconstruction error:", np.max(np.abs(model(space.states()) - h)))
print("norm from values  :", np.sqrt(inner_product(h, h, basis.measure)))
print("norm from spectrum:", parseval_norm(model))
