"""Gaussian-process priors on a finite product space and the SHAP error bounds they imply.

A kernel ``K`` is stored as the covariance matrix of the function values,
``E[h(x) h(y)] = K(x, y)``, in the dense state order. As an operator on
``L2(mu)`` it acts by ``(K f)(x) = sum_y K(x, y) f(y) mu(y)``, so the
covariance of the Fourier coefficients of ``h`` is ``B^T D K D B`` where
``B[x, k] = Psi_k(x)`` and ``D = diag(mu)``.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.special import erf

from .errors import (DenseLimitError, KernelRecursionError, ParameterError, SchemaError,
                     SpectrumError)
from .measure import ProductMeasure, TensorBasis
from .spectral import Selector

logger = logging.getLogger(__name__)

#: Largest space for which kernels are held as explicit matrices.
MATRIX_LIMIT = 4096


def atom_matrix(basis: TensorBasis) -> np.ndarray:
    """``B[x, k] = Psi_k(x)`` over the whole space (rows: states, columns: indices)."""
    if basis.space.size > MATRIX_LIMIT:
        raise DenseLimitError(f"{basis.space.size} states exceeds the matrix limit {MATRIX_LIMIT}")
    return reduce(np.kron, [t.T for t in basis.tables])


def synthesize(basis: TensorBasis, coefs: np.ndarray) -> np.ndarray:
    """Value tables from coefficient rows; ``coefs`` has shape ``(..., |Y|)``."""
    coefs = np.asarray(coefs, dtype=float)
    lead = coefs.shape[:-1]
    t = coefs.reshape((-1,) + basis.space.shape)
    return _apply_axes_batched(t, [tab.T for tab in basis.tables]).reshape(lead + (-1,))


def analyze(basis: TensorBasis, values: np.ndarray) -> np.ndarray:
    """Fourier coefficients of value-table rows; ``values`` has shape ``(..., |Y|)``."""
    values = np.asarray(values, dtype=float)
    lead = values.shape[:-1]
    t = values.reshape((-1,) + basis.space.shape)
    mats = [c.psi * c.mu for c in basis.coords]
    return _apply_axes_batched(t, mats).reshape(lead + (-1,))


def _apply_axes_batched(t: np.ndarray, mats) -> np.ndarray:
    out = t
    for axis, mat in enumerate(mats, start=1):
        out = np.moveaxis(np.tensordot(mat, out, axes=(1, axis)), 0, axis)
    return out


def _check_psd(A: np.ndarray, name: str, err=ParameterError) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise err(f"{name} must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10 * scale:
        raise err(f"{name} is not symmetric")
    A = 0.5 * (A + A.T)
    if A.size and np.linalg.eigvalsh(A)[0] < -1e-8 * scale:
        raise err(f"{name} is not positive semidefinite")
    return A


def psd_sqrt(A: np.ndarray) -> np.ndarray:
    """Symmetric square root; eigenvalues in ``[-1e-10, 0)`` are treated as zero."""
    vals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    if vals.size and vals[0] < -1e-10 * max(1.0, abs(vals[-1])):
        raise ParameterError(f"matrix has eigenvalue {vals[0]:.3g}; not PSD")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


class KernelOperator:
    """Covariance kernel on the finite space, optionally diagonal in the tensor basis."""

    def __init__(self, basis: TensorBasis, matrix=None, spectrum=None, diagonal_tol: float = 1e-8):
        self.basis = basis
        self._matrix = None
        self._coef_cov = None
        if spectrum is not None:
            s = np.asarray(spectrum, dtype=float).reshape(-1)
            if s.size != basis.space.size:
                raise SpectrumError(f"spectrum has {s.size} entries; the index set has {basis.space.size}")
            if np.any(~np.isfinite(s)) or np.any(s < 0):
                raise SpectrumError("spectrum entries must be finite and nonnegative")
            s.setflags(write=False)
            self.spectrum = s
            self.diagonal_in_basis = True
        elif matrix is not None:
            K = _check_psd(matrix, "kernel matrix")
            if K.shape[0] != basis.space.size:
                raise SpectrumError(f"kernel is {K.shape[0]}x{K.shape[0]}; the space has {basis.space.size} states")
            self._matrix = K
            M = self.coefficient_covariance()
            off = M - np.diag(np.diag(M))
            scale = max(1.0, float(np.max(np.abs(M))))
            self.diagonal_in_basis = bool(np.max(np.abs(off), initial=0.0) <= diagonal_tol * scale)
            self.spectrum = np.clip(np.diag(M), 0.0, None) if self.diagonal_in_basis else None
        else:
            raise ParameterError("give either a matrix or a spectrum")

    @classmethod
    def from_spectrum(cls, basis: TensorBasis, spectrum) -> "KernelOperator":
        """Kernel ``sum_k s_k Psi_k(x) Psi_k(y)``; ``spectrum`` is dense or ``{k: s_k}``."""
        if isinstance(spectrum, dict):
            dense = np.zeros(basis.space.shape)
            for k, s in spectrum.items():
                dense[tuple(basis.check_index(k))] = s
            spectrum = dense
        return cls(basis, spectrum=spectrum)

    @classmethod
    def from_matrix(cls, basis: TensorBasis, matrix, diagonal_tol: float = 1e-8) -> "KernelOperator":
        return cls(basis, matrix=matrix, diagonal_tol=diagonal_tol)

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            B = atom_matrix(self.basis)
            self._matrix = (B * self.spectrum) @ B.T
        return self._matrix

    def coefficient_covariance(self) -> np.ndarray:
        """``E[c_k c_j]`` for ``c_k = <h, Psi_k>``; diagonal iff the basis diagonalizes ``K``."""
        if self._coef_cov is None:
            if self._matrix is None:
                self._coef_cov = np.diag(self.spectrum)
            else:
                B = atom_matrix(self.basis)
                DB = B * self.basis.measure.weights()[:, None]
                self._coef_cov = DB.T @ self._matrix @ DB
        return self._coef_cov

    def apply(self, f) -> np.ndarray:
        """Operator action ``(K f)(x) = sum_y K(x, y) f(y) mu(y)``."""
        f = np.asarray(f, dtype=float).ravel()
        return self.matrix @ (f * self.basis.measure.weights())

    def coefficient_variances(self) -> np.ndarray:
        if self.diagonal_in_basis:
            return self.spectrum
        return np.diag(self.coefficient_covariance())

    def require_diagonal(self) -> np.ndarray:
        if not self.diagonal_in_basis:
            raise SpectrumError("kernel is not diagonal in the tensor basis")
        return self.spectrum


@dataclass(frozen=True)
class GPSample:
    values: np.ndarray
    seed: int
    coefficients: np.ndarray


@dataclass(frozen=True)
class TailStatistics:
    """Sum, sum of squares and maximum of the discarded spectrum."""

    sum1: float
    sum2: float
    smax: float

    def __post_init__(self):
        if min(self.sum1, self.sum2, self.smax) < 0:
            raise ParameterError("tail statistics must be nonnegative")

    @classmethod
    def from_values(cls, s) -> "TailStatistics":
        s = np.asarray(s, dtype=float)
        if s.size == 0:
            return cls(0.0, 0.0, 0.0)
        return cls(float(s.sum()), float(np.sum(s ** 2)), float(s.max()))


def kl_coefficients(K: KernelOperator, size: int, seed) -> np.ndarray:
    """``size`` draws of ``c_k = sqrt(s_k) Z_k``; shape ``(size, |Y|)``."""
    s = K.require_diagonal()
    rng = np.random.default_rng(seed)
    return rng.standard_normal((size, s.size)) * np.sqrt(s)


def kl_sample(K: KernelOperator, seed) -> GPSample:
    """One Karhunen-Loeve draw ``h = sum_k sqrt(s_k) Z_k Psi_k``."""
    c = kl_coefficients(K, 1, seed)[0]
    return GPSample(synthesize(K.basis, c[None])[0], seed, c)


def sample_values(K: KernelOperator, size: int, seed) -> np.ndarray:
    """``size`` draws of the value table of ``h ~ GP(0, K)``; shape ``(size, |Y|)``.

    Diagonal kernels use the Karhunen-Loeve expansion, others a symmetric
    square root of the covariance matrix.
    """
    if K.diagonal_in_basis:
        return synthesize(K.basis, kl_coefficients(K, size, seed))
    rng = np.random.default_rng(seed)
    root = psd_sqrt(K.matrix)
    return rng.standard_normal((size, root.shape[0])) @ root


def residual_energy(K: KernelOperator, values: np.ndarray, selector) -> np.ndarray:
    """``||(I - P_S) h||^2`` in ``L2(mu)`` for each value-table row."""
    keep = _index_mask(K, selector)
    c = analyze(K.basis, values)
    return np.sum(c[..., ~keep] ** 2, axis=-1)


def _index_mask(K: KernelOperator, selector) -> np.ndarray:
    """True for retained multi-indices, over the full index set in dense order."""
    idx = K.basis.space.states()
    return Selector.coerce(selector).mask(idx, K.coefficient_variances())


def expected_residual_trace(K: KernelOperator, selector) -> float:
    """``tr((I - P_S) K)`` on ``L2(mu)``: the expected squared norm of the discarded part."""
    keep = _index_mask(K, selector)
    return float(np.sum(K.coefficient_variances()[~keep]))


def tail_statistics(K: KernelOperator, selector) -> TailStatistics:
    s = K.require_diagonal()
    keep = _index_mask(K, selector)
    return TailStatistics.from_values(s[~keep])


def tail_weights_sq(basis: TensorBasis, keep: np.ndarray, i: int, x) -> float:
    """``sum_{k not in S} w_k(i; x)^2`` over the full index set."""
    x = basis.space.check_state(x)
    psi = basis.atoms_at_all(x).ravel()
    idx = basis.space.states()
    d = np.count_nonzero(idx, axis=1)
    on = (idx[:, i] != 0) & ~keep
    return float(np.sum((psi[on] / d[on]) ** 2))


def expected_shap_bound(K: KernelOperator, selector, i: int, x, weights_sq: float | None = None) -> float:
    """Bound on ``E|phi_i(h) - phi_i(h_S)|`` under ``h ~ GP(0, K)`` with ``K`` diagonal."""
    s = K.require_diagonal()
    keep = _index_mask(K, selector)
    if weights_sq is None:
        weights_sq = tail_weights_sq(K.basis, keep, i, x)
    return float(math.sqrt(weights_sq) * math.sqrt(np.sum(s[~keep])))


def high_probability_bound(tail: TailStatistics, weights_sq_sum: float, delta: float) -> float:
    """Bound on ``|phi_i(h) - phi_i(h_S)|`` holding with probability at least ``1 - delta``."""
    if not 0.0 < delta < 1.0:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    if weights_sq_sum < 0:
        raise ParameterError("weights_sq_sum must be nonnegative")
    t = math.log(2.0 / delta)
    radius = tail.sum1 + 2.0 * math.sqrt(tail.sum2 * t) + 2.0 * tail.smax * t
    return math.sqrt(weights_sq_sum) * math.sqrt(radius)


def laurent_massart_thresholds(a, t: float) -> tuple[float, float]:
    """Deviation levels for ``sum_j a_j (xi_j^2 - 1)`` each exceeded with probability <= e^-t.

    Returns ``(upper, lower)``: ``P(S >= upper) <= e^-t`` and ``P(S <= -lower) <= e^-t``.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or t <= 0:
        raise ParameterError("need nonnegative weights and t > 0")
    root = 2.0 * math.sqrt(float(np.sum(a ** 2)) * t)
    return root + 2.0 * float(a.max(initial=0.0)) * t, root


def finite_width_bound(weights_sq_sum: float, sum1: float, eps: float) -> float:
    """``sqrt(sum w_k^2) * (sqrt(sum_{k not in S} s_k) + eps_N)``."""
    if min(weights_sq_sum, sum1, eps) < 0:
        raise ParameterError("finite_width_bound inputs must be nonnegative")
    return math.sqrt(weights_sq_sum) * (math.sqrt(sum1) + eps)


def shap_gaps(basis: TensorBasis, coefs: np.ndarray, keep: np.ndarray, i: int, x) -> np.ndarray:
    """``phi_i(h) - phi_i(h_S)`` for each coefficient row, via the spectral formula."""
    x = basis.space.check_state(x)
    idx = basis.space.states()
    d = np.count_nonzero(idx, axis=1)
    psi = basis.atoms_at_all(x).ravel()
    contrib = np.zeros(idx.shape[0])
    on = (idx[:, i] != 0) & ~keep
    contrib[on] = psi[on] / d[on]
    return np.asarray(coefs) @ contrib


# --- NNGP kernels -----------------------------------------------------------

def _relu_expectation(G: np.ndarray) -> np.ndarray:
    diag = np.clip(np.diag(G), 0.0, None)
    norm = np.sqrt(np.outer(diag, diag))
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(norm > 0, G / np.where(norm > 0, norm, 1.0), 1.0)
    theta = np.arccos(np.clip(cos, -1.0, 1.0))
    return norm / (2 * np.pi) * (np.sin(theta) + (np.pi - theta) * np.cos(theta))


def _erf_expectation(G: np.ndarray) -> np.ndarray:
    d = 1.0 + 2.0 * np.diag(G)
    return (2.0 / np.pi) * np.arcsin(np.clip(2.0 * G / np.sqrt(np.outer(d, d)), -1.0, 1.0))


ACTIVATIONS = {
    "relu": lambda u: np.maximum(u, 0.0),
    "erf": erf,
    "tanh": np.tanh,
    "linear": lambda u: u,
}
_CLOSED_FORMS = {"relu": _relu_expectation, "erf": _erf_expectation, "linear": lambda G: G}


def gaussian_expectation(G, activation: str = "relu", method: str = "closed",
                         mc_samples: int = 100_000, seed=0, return_se: bool = False):
    """``E[sigma(U) sigma(V)]`` for ``(U, V) ~ N(0, G[[x, y]][:, [x, y]])``, all pairs.

    ``method="monte_carlo"`` uses ``mc_samples`` common bivariate normal draws
    for every entry; with ``return_se`` the standard errors are returned too.
    """
    G = np.asarray(G, dtype=float)
    if method == "closed":
        if activation not in _CLOSED_FORMS:
            raise ParameterError(f"no closed form for activation {activation!r}")
        E = _CLOSED_FORMS[activation](G)
        return (E, np.zeros_like(E)) if return_se else E
    if method != "monte_carlo":
        raise ParameterError(f"unknown method {method!r}")
    sigma = ACTIVATIONS[activation] if isinstance(activation, str) else activation
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2, mc_samples))
    n = G.shape[0]
    E = np.zeros_like(G)
    SE = np.zeros_like(G)
    sd = np.sqrt(np.clip(np.diag(G), 0.0, None))
    for a in range(n):
        su = sigma(sd[a] * z[0])
        for b in range(a, n):
            if a == b:
                prod = su * su
            else:
                rho = G[a, b] / (sd[a] * sd[b]) if sd[a] * sd[b] > 0 else 0.0
                rho = min(1.0, max(-1.0, rho))
                v = sd[b] * (rho * z[0] + math.sqrt(1.0 - rho * rho) * z[1])
                prod = su * sigma(v)
            E[a, b] = E[b, a] = prod.mean()
            SE[a, b] = SE[b, a] = prod.std(ddof=1) / math.sqrt(mc_samples)
    return (E, SE) if return_se else E


def nngp_gram(base_gram, depth: int, sigma_w2: float, sigma_b2: float, activation: str = "relu",
              method: str = "closed", mc_samples: int = 100_000, seed=0) -> np.ndarray:
    """Layer recursion ``K_l = sigma_b^2 + sigma_w^2 E[sigma(U) sigma(V)]``, ``(U, V) ~ N(0, K_{l-1})``."""
    if depth < 1:
        raise ParameterError("depth must be at least 1")
    if sigma_w2 < 0 or sigma_b2 < 0:
        raise ParameterError("variances must be nonnegative")
    K = _check_psd(base_gram, "base Gram matrix")
    for layer in range(depth):
        E = gaussian_expectation(K, activation, method, mc_samples,
                                 None if seed is None else seed + layer)
        K = sigma_b2 + sigma_w2 * E
        K = 0.5 * (K + K.T)
        K = _repair_psd(K, layer + 1)
    return K


def _repair_psd(K: np.ndarray, layer: int) -> np.ndarray:
    vals, vecs = np.linalg.eigh(K)
    scale = max(1.0, float(np.abs(vals).max(initial=0.0)))
    if vals[0] < -1e-6 * scale:
        raise KernelRecursionError(f"layer {layer} kernel has eigenvalue {vals[0]:.3g}")
    if vals[0] < -1e-10 * scale:
        logger.warning("layer %d kernel clipped (min eigenvalue %.3g)", layer, vals[0])
        K = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
        K = 0.5 * (K + K.T)
    return K


def encode_states(basis: TensorBasis, encoding: str = "onehot") -> np.ndarray:
    """Network input vectors for every state, scaled so each has squared norm 1.

    ``onehot`` concatenates per-feature indicators; ``pm1`` maps binary states
    to -1/+1; ``ordinal`` rescales each state to ``[-1, 1]``.
    """
    X = basis.space.states()
    n = basis.space.n
    if encoding == "onehot":
        cols = [np.eye(m)[X[:, i]] for i, m in enumerate(basis.space.cardinalities)]
        return np.hstack(cols) / math.sqrt(n)
    if encoding == "pm1":
        if any(m != 2 for m in basis.space.cardinalities):
            raise ParameterError("pm1 encoding needs binary features")
        return (2.0 * X - 1.0) / math.sqrt(n)
    if encoding == "ordinal":
        cards = np.asarray(basis.space.cardinalities) - 1.0
        return (2.0 * X / cards - 1.0) / math.sqrt(n)
    raise ParameterError(f"unknown encoding {encoding!r}")


def nngp_kernel(basis: TensorBasis, depth: int, sigma_w2: float, sigma_b2: float,
                activation: str = "relu", encoding: str = "onehot", method: str = "closed",
                mc_samples: int = 100_000, seed=0) -> KernelOperator:
    """NNGP kernel of a fully connected network over the encoded states of ``basis``."""
    E = encode_states(basis, encoding)
    G = nngp_gram(E @ E.T, depth, sigma_w2, sigma_b2, activation, method, mc_samples, seed)
    return KernelOperator.from_matrix(basis, G)


# --- Wasserstein distances and finite-width estimates -----------------------

def gaussian_w2(A, B, weights=None) -> float:
    """2-Wasserstein distance between ``N(0, A)`` and ``N(0, B)``.

    With ``weights`` (the state masses ``mu(x)``) the distance is measured in
    the ``L2(mu)`` norm, i.e. both covariances are conjugated by ``D^{1/2}``.
    """
    A = _check_psd(A, "A")
    B = _check_psd(B, "B")
    if A.shape != B.shape:
        raise ParameterError(f"dimension mismatch {A.shape} vs {B.shape}")
    if weights is not None:
        r = np.sqrt(np.asarray(weights, dtype=float))
        A = A * np.outer(r, r)
        B = B * np.outer(r, r)
    rA = psd_sqrt(A)
    cross = psd_sqrt(rA @ B @ rA)
    w2sq = float(np.trace(A) + np.trace(B) - 2.0 * np.trace(cross))
    return math.sqrt(max(w2sq, 0.0))


class ReadoutNetwork:
    """One-hidden-layer network with random Gaussian weights and a Gaussian readout.

    ``h(x) = b + sqrt(sigma_w2 / width) * sum_j v_j sigma(g_j . e(x))`` with
    ``g_j ~ N(0, I)``, ``v_j ~ N(0, 1)``, ``b ~ N(0, sigma_b2)``. Its law is a
    mixture over the hidden weights of ``N(0, Sigma)`` with
    ``Sigma = sigma_b2 + sigma_w2 / width * F F^T``; as ``width`` grows it
    tends to the depth-1 NNGP with base Gram ``e(x) . e(y)``.
    """

    def __init__(self, encoded: np.ndarray, width: int, sigma_w2: float = 1.0,
                 sigma_b2: float = 0.0, activation: str = "relu"):
        self.encoded = np.asarray(encoded, dtype=float)
        self.width = int(width)
        self.sigma_w2 = sigma_w2
        self.sigma_b2 = sigma_b2
        self.sigma = ACTIVATIONS[activation]
        self.activation = activation

    def limit_kernel(self) -> np.ndarray:
        G = self.encoded @ self.encoded.T
        return nngp_gram(G, 1, self.sigma_w2, self.sigma_b2, self.activation)

    def hidden(self, rng: np.random.Generator) -> np.ndarray:
        g = rng.standard_normal((self.encoded.shape[1], self.width))
        return self.sigma(self.encoded @ g)

    def conditional_covariance(self, F: np.ndarray) -> np.ndarray:
        return self.sigma_b2 + (self.sigma_w2 / self.width) * (F @ F.T)

    def sample(self, F: np.ndarray, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """Function tables for ``size`` readout draws sharing hidden features ``F``."""
        v = rng.standard_normal((self.width, size))
        b = rng.standard_normal(size) * math.sqrt(self.sigma_b2)
        return (math.sqrt(self.sigma_w2 / self.width) * (F @ v) + b).T


def estimate_epsilon(net: ReadoutNetwork, weights, n_hidden: int, seed) -> float:
    """Estimate of ``W2(law of finite network, NNGP limit)`` in ``L2(mu)``.

    For each hidden-layer draw the network output is exactly Gaussian with
    the conditional covariance; the squared Bures distances to the limit
    kernel are averaged, which upper-bounds the squared distance of the
    mixture by joint convexity. Monte-Carlo estimate, not a certified bound.
    """
    rng = np.random.default_rng(seed)
    Kinf = net.limit_kernel()
    sq = [gaussian_w2(net.conditional_covariance(net.hidden(rng)), Kinf, weights) ** 2
          for _ in range(n_hidden)]
    return math.sqrt(float(np.mean(sq)))


def moment_matched_epsilon(samples: np.ndarray, K: np.ndarray, weights=None) -> float:
    """Bures distance between a Gaussian fitted to ``samples`` (rows) and ``N(0, K)``."""
    samples = np.asarray(samples, dtype=float)
    cov = samples.T @ samples / len(samples)
    return gaussian_w2(cov, K, weights)


def kernel_from_spec(spec: dict) -> KernelOperator:
    """Kernel from a JSON-style mapping with embedded space and one of three recipes.

    ``{"cardinalities": [...], "measures": [...], "kernel": {...}}`` where the
    kernel is ``{"type": "matrix", "matrix": [[...]]}``,
    ``{"type": "spectrum", "spectrum": [...]}`` (dense, mixed-radix order) or
    ``{"type": "spectrum", "entries": [{"k": [...], "s": v}, ...]}``, or
    ``{"type": "nngp", "depth": L, "sigma_w2": a, "sigma_b2": b,
    "activation": "relu", "encoding": "onehot"}``.
    """
    if not isinstance(spec, dict) or "kernel" not in spec:
        raise SchemaError("kernel description needs 'cardinalities', 'measures' and 'kernel'")
    basis = TensorBasis(ProductMeasure.from_dict(spec))
    k = spec["kernel"]
    kind = k.get("type")
    try:
        if kind == "matrix":
            return KernelOperator.from_matrix(basis, np.asarray(k["matrix"], dtype=float))
        if kind == "spectrum":
            if "entries" in k:
                return KernelOperator.from_spectrum(
                    basis, {tuple(e["k"]): float(e["s"]) for e in k["entries"]})
            return KernelOperator.from_spectrum(basis, np.asarray(k["spectrum"], dtype=float))
        if kind == "nngp":
            allowed = {"type", "depth", "sigma_w2", "sigma_b2", "activation", "encoding"}
            extra = set(k) - allowed
            if extra:
                raise SchemaError(f"unknown nngp keys: {sorted(extra)}")
            return nngp_kernel(basis, int(k["depth"]), float(k["sigma_w2"]), float(k["sigma_b2"]),
                               k.get("activation", "relu"), k.get("encoding", "onehot"))
    except KeyError as exc:
        raise SchemaError(f"kernel description is missing {exc}") from None
    raise SchemaError(f"unknown kernel type {kind!r}")


def load_kernel(path) -> KernelOperator:
    with open(path) as fh:
        return kernel_from_spec(json.load(fh))
