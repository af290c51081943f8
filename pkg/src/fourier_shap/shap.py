"""Shapley attributions: exact enumeration, spectral closed form, Kernel SHAP."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .errors import (CoalitionLimitError, DenseLimitError, KernelShapDegenerateError,
                     ParameterError)
from .measure import ProductMeasure
from .spectral import DENSE_LIMIT, Selector, SparseFourierModel, as_predictor, tabulate

MAX_BRUTE_FORCE_FEATURES = 20
# rows handed to a predictor per call while marginalizing coalitions
_CHUNK_ROWS = 2 ** 18


@dataclass(frozen=True)
class Attribution:
    instance: np.ndarray
    phi: np.ndarray
    base_value: float
    method: str
    bound: np.ndarray | None = None

    @property
    def total(self) -> float:
        """``base_value + sum(phi)``; equals the prediction for exact methods."""
        return float(self.base_value + np.sum(self.phi))


@dataclass(frozen=True)
class FrequencyWeights:
    feature: int
    instance: np.ndarray
    indices: np.ndarray
    weights: np.ndarray

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in k): float(w) for k, w in zip(self.indices, self.weights)}


def _complement_grid(x: np.ndarray, comp: np.ndarray, measure: ProductMeasure):
    """Rows with ``x`` pinned outside ``comp`` and every state of ``comp``, plus weights."""
    cards = [measure.space.cardinalities[j] for j in comp]
    size = int(np.prod(cards, dtype=np.int64)) if len(comp) else 1
    rows = np.tile(x, (size, 1))
    w = np.ones(1)
    if len(comp):
        rows[:, comp] = np.indices(cards).reshape(len(comp), -1).T
        for j in comp:
            w = np.multiply.outer(w, measure.probs[j]).ravel()
    return rows, w


def coalition_value(h, S, x, measure: ProductMeasure, limit: int = DENSE_LIMIT) -> float:
    """Expected prediction with features in ``S`` pinned to ``x`` and the rest drawn from ``mu``."""
    space = measure.space
    x = space.check_state(x)
    h = as_predictor(h, space)
    return float(_coalition_values(h, [_mask_from_set(S, space.n)], x, measure, limit)[0])


def _mask_from_set(S, n: int) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    for i in S:
        i = int(i)
        if not 0 <= i < n:
            raise ParameterError(f"feature {i} not in range(0, {n})")
        mask[i] = True
    return mask


def _coalition_values(h, masks, x, measure: ProductMeasure, limit: int = DENSE_LIMIT) -> np.ndarray:
    cards = np.asarray(measure.space.cardinalities)
    out = np.empty(len(masks))
    pending_rows, pending_w, pending_slot = [], [], []
    pending = 0

    def flush():
        nonlocal pending
        if not pending_rows:
            return
        vals = np.asarray(h(np.concatenate(pending_rows)), dtype=float)
        start = 0
        for w, slot in zip(pending_w, pending_slot):
            out[slot] = np.dot(vals[start:start + w.size], w)
            start += w.size
        pending_rows.clear()
        pending_w.clear()
        pending_slot.clear()
        pending = 0

    for slot, mask in enumerate(masks):
        comp = np.flatnonzero(~np.asarray(mask, dtype=bool))
        size = int(np.prod(cards[comp], dtype=np.int64)) if comp.size else 1
        if size > limit:
            raise DenseLimitError(f"complement of coalition has {size} states; limit is {limit}")
        rows, w = _complement_grid(x, comp, measure)
        pending_rows.append(rows)
        pending_w.append(w)
        pending_slot.append(slot)
        pending += size
        if pending >= _CHUNK_ROWS:
            flush()
    flush()
    return out


def all_coalition_values(h, x, measure: ProductMeasure) -> np.ndarray:
    """``v[mask]`` for all ``2**n`` coalitions; bit ``i`` of ``mask`` marks feature ``i``.

    When the space can be tabulated this contracts every axis with the
    two-row matrix ``[mu_i; e_{x_i}]`` in one pass; otherwise each coalition
    is marginalized separately.
    """
    space = measure.space
    n = space.n
    x = space.check_state(x)
    if space.size <= DENSE_LIMIT:
        tensor = tabulate(h, space).reshape(space.shape)
        for axis, (p, xi) in enumerate(zip(measure.probs, x)):
            mat = np.zeros((2, len(p)))
            mat[0] = p
            mat[1, xi] = 1.0
            tensor = np.moveaxis(np.tensordot(mat, tensor, axes=(1, axis)), 0, axis)
        return tensor.transpose(tuple(range(n))[::-1]).ravel()
    bits = (np.arange(2 ** n)[:, None] >> np.arange(n)) & 1
    return _coalition_values(as_predictor(h, space), bits.astype(bool), x, measure)


def shapley_weights(n: int) -> np.ndarray:
    """``|S|! (n - |S| - 1)! / n!`` for ``|S| = 0..n-1``, computed exactly then rounded."""
    return np.array([float(Fraction(math.factorial(s) * math.factorial(n - s - 1),
                                    math.factorial(n))) for s in range(n)])


def brute_force_shap(h, x, measure: ProductMeasure) -> Attribution:
    """Exact Shapley values by enumerating all coalitions."""
    n = measure.space.n
    if n > MAX_BRUTE_FORCE_FEATURES:
        raise CoalitionLimitError(f"{n} features; enumeration is capped at {MAX_BRUTE_FORCE_FEATURES}")
    x = measure.space.check_state(x)
    v = all_coalition_values(h, x, measure)
    masks = np.arange(2 ** n)
    sizes = np.array([bin(m).count("1") for m in masks])
    w = shapley_weights(n)
    phi = np.zeros(n)
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        phi[i] = np.dot(w[sizes[without]], v[without | bit] - v[without])
    return Attribution(x, phi + 0.0, float(v[0]), "brute")


def _shap_cache(model: SparseFourierModel):
    cache = getattr(model, "_shap_rows", None)
    if cache is None:
        K = model.indices
        rows = [tab[K[:, i]].T.copy() for i, tab in enumerate(model.basis.tables)]
        d = np.count_nonzero(K, axis=1)
        inv_d = np.where(d > 0, 1.0 / np.maximum(d, 1), 0.0)
        active = (K != 0).T.astype(float)
        cache = (rows, model.coefs * inv_d, active)
        model._shap_rows = cache
    return cache


def fourier_shap(model: SparseFourierModel, x) -> Attribution:
    """Shapley values read off the spectrum: ``sum_{k_i != 0} h_hat(k) Psi_k(x) / d(k)``."""
    x = model.space.check_state(x)
    rows, scaled, active = _shap_cache(model)
    psi = np.ones(len(scaled))
    for r, xi in zip(rows, x):
        psi *= r[xi]
    phi = active @ (scaled * psi) if len(scaled) else np.zeros(model.space.n)
    return Attribution(x, phi + 0.0, model.constant, "fourier")


def _weights_for(basis, K: np.ndarray, i: int, x: np.ndarray) -> np.ndarray:
    d = np.count_nonzero(K, axis=1)
    psi = basis.atoms_at(K, x) if len(K) else np.zeros(0)
    w = np.zeros(len(K))
    on = K[:, i] != 0 if len(K) else np.zeros(0, dtype=bool)
    w[on] = np.abs(psi[on]) / d[on]
    return w


def frequency_weights(model: SparseFourierModel, i: int, x, indices=None) -> FrequencyWeights:
    """``w_k(i; x) = 1{k_i != 0} |Psi_k(x)| / d(k)`` for the stored (or given) indices."""
    x = model.space.check_state(x)
    if not 0 <= i < model.space.n:
        raise ParameterError(f"feature {i} not in range(0, {model.space.n})")
    K = model.indices if indices is None else np.asarray(indices, dtype=np.int64).reshape(-1, model.space.n)
    return FrequencyWeights(i, x, K, _weights_for(model.basis, K, i, x))


def truncation_bound(model: SparseFourierModel, selector, i: int, x, over: str = "support") -> float:
    """Cauchy-Schwarz bound on ``|phi_i(h) - phi_i(h_S)|`` for the truncation ``S``.

    ``over="support"`` sums the weights over discarded stored entries, the
    only ones that can contribute to the gap. ``over="all"`` sums over every
    discarded multi-index of the space, entries with zero coefficient
    included; it needs a dense enumeration of the index set.
    """
    x = model.space.check_state(x)
    sel = Selector.coerce(selector)
    if over == "support":
        tail = ~sel.mask(model.indices, model.coefs)
        K, c = model.indices[tail], model.coefs[tail]
        w = _weights_for(model.basis, K, i, x)
        return float(np.sqrt(np.sum(w ** 2)) * np.sqrt(np.sum(c ** 2)))
    if over == "all":
        space = model.space
        coef = model.coef_tensor().ravel()
        K_all = space.states()
        tail = ~sel.mask(K_all, coef)
        w = _weights_for(model.basis, K_all[tail], i, x)
        return float(np.sqrt(np.sum(w ** 2)) * np.sqrt(np.sum(coef[tail] ** 2)))
    raise ParameterError(f"over must be 'support' or 'all', not {over!r}")


def _kernel_design(n: int, budget: int, rng: np.random.Generator):
    """Coalition masks and Shapley-kernel weights for ``budget`` proper coalitions.

    Size classes ``s`` and ``n - s`` are enumerated outright while their
    share of the remaining budget covers them; the rest is sampled in
    complementary pairs with weight proportional to the kernel mass.
    """
    sizes = np.arange(1, n)
    mass = (n - 1) / (sizes * (n - sizes))
    mass = mass / mass.sum()
    masks, weights = [], []

    def subsets(s):
        for comb in combinations(range(n), s):
            m = np.zeros(n, dtype=bool)
            m[list(comb)] = True
            yield m

    if budget >= 2 ** n - 2:
        for s in sizes:
            each = mass[s - 1] / math.comb(n, s)
            for m in subsets(s):
                masks.append(m)
                weights.append(each)
        return np.array(masks), np.array(weights)

    remaining_budget = budget
    remaining = np.ones(n - 1, dtype=bool)
    for s in range(1, n // 2 + 1):
        pair = [s] if s == n - s else [s, n - s]
        count = sum(math.comb(n, t) for t in pair)
        share = mass[[t - 1 for t in pair]].sum() / mass[remaining].sum()
        if count > remaining_budget * share + 1e-9:
            break
        for t in pair:
            each = mass[t - 1] / math.comb(n, t)
            for m in subsets(t):
                masks.append(m)
                weights.append(each)
            remaining[t - 1] = False
        remaining_budget -= count
    if remaining_budget >= 2 and remaining.any():
        left = mass[remaining].sum()
        probs = mass[remaining] / left
        cand = sizes[remaining]
        n_pairs = remaining_budget // 2
        sampled: dict[bytes, list] = {}
        each = left / (2 * n_pairs)
        for _ in range(n_pairs):
            s = int(rng.choice(cand, p=probs))
            m = np.zeros(n, dtype=bool)
            m[rng.choice(n, size=s, replace=False)] = True
            for mm in (m, ~m):
                key = mm.tobytes()
                if key in sampled:
                    sampled[key][1] += each
                else:
                    sampled[key] = [mm, each]
        for mm, w in sampled.values():
            masks.append(mm)
            weights.append(w)
    return np.array(masks).reshape(-1, n), np.array(weights)


def kernel_shap(h, x, measure: ProductMeasure, budget: int, seed: int = 0) -> Attribution:
    """Kernel SHAP with exact marginalization under ``mu``.

    Solves the Shapley-kernel weighted least-squares problem over the
    sampled coalitions with efficiency imposed as an equality constraint.
    Deterministic for a given ``seed``.
    """
    space = measure.space
    n = space.n
    x = space.check_state(x)
    if budget < n + 2:
        raise ParameterError(f"budget {budget} below n + 2 = {n + 2}")
    h = as_predictor(h, space)
    full = np.ones(n, dtype=bool)
    v_empty, v_full = _coalition_values(h, [~full, full], x, measure)
    delta = v_full - v_empty
    if n == 1:
        return Attribution(x, np.array([delta]), float(v_empty), "kernel")

    rng = np.random.default_rng(seed)
    Z, w = _kernel_design(n, budget - 2, rng)
    if len(Z) == 0:
        raise KernelShapDegenerateError("no coalitions sampled")
    v = _coalition_values(h, Z, x, measure)
    Zf = Z.astype(float)
    X = Zf[:, :-1] - Zf[:, -1:]
    t = (v - v_empty) - Zf[:, -1] * delta
    sw = np.sqrt(w)
    beta, _, rank, _ = np.linalg.lstsq(X * sw[:, None], t * sw, rcond=None)
    if rank < n - 1:
        raise KernelShapDegenerateError(
            f"regression rank {rank} < {n - 1}; too few distinct coalitions")
    phi = np.append(beta, delta - beta.sum())
    return Attribution(x, phi + 0.0, float(v_empty), "kernel")
