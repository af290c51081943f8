"""Empirical three-stage atom selection and least-squares coefficient fitting."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numpy.linalg import LinAlgError
from scipy.linalg import cho_factor, cho_solve

from ..errors import DataError, FitError, ParameterError
from ..measure import TensorBasis
from ..spectral import SparseFourierModel

logger = logging.getLogger(__name__)

# candidate columns scored per block in stages 2 and 3
_BLOCK = 2048


@dataclass
class AtomSelection:
    """Selected multi-indices with their absolute correlation scores.

    ``selected`` lists stage 1, then stage 2, then stage 3 atoms, each
    stage in ranking order.
    """

    K1: int
    K2: int
    K3: int
    d_max: int
    per_feature_top: int
    selected: np.ndarray
    scores: np.ndarray
    stage: np.ndarray
    notes: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.selected)

    def stage_indices(self, s: int) -> np.ndarray:
        return self.selected[self.stage == s]

    def to_records(self) -> list[dict]:
        return [{"k": [int(v) for v in k], "score": float(c), "stage": int(s)}
                for k, c, s in zip(self.selected, self.scores, self.stage)]


def _abs_corr(cols: np.ndarray, yc: np.ndarray, ynorm: float) -> np.ndarray:
    """|Pearson correlation| of each column with the centered target; 0 for constant columns."""
    cc = cols - cols.mean(axis=0)
    norms = np.sqrt(np.einsum("ij,ij->j", cc, cc))
    scale = np.sqrt(len(cols)) * (np.abs(cols).max(axis=0) + 1.0)
    ok = norms > 1e-12 * scale
    out = np.zeros(cols.shape[1])
    if ynorm > 0:
        out[ok] = np.abs(yc @ cc[:, ok]) / (norms[ok] * ynorm)
    return np.minimum(out, 1.0), ok


def _rank(K: np.ndarray, score: np.ndarray, valid: np.ndarray, budget: int) -> np.ndarray:
    """Positions of the top ``budget`` valid candidates: higher score, then lexicographic ``k``."""
    pos = np.flatnonzero(valid)
    if not pos.size:
        return pos
    keys = [K[pos, j] for j in range(K.shape[1] - 1, -1, -1)] + [-score[pos]]
    return pos[np.lexsort(keys)][:budget]


def select_atoms(states, targets, basis: TensorBasis, K1: int = 300, K2: int = 4000,
                 K3: int = 2000, d_max: int = 3, per_feature_top: int = 5) -> AtomSelection:
    """Greedy correlation screening of order-1, order-2 and order-3 atoms.

    Stage 1 scores every univariate atom against the targets and keeps the
    best ``K1``. Stage 2 pairs the ``per_feature_top`` strongest modes of each
    feature across features and keeps the best ``K2`` products. Stage 3
    extends every retained pair by a strong mode of a third feature and keeps
    the best ``K3`` triples. Atoms whose column is constant on the data never
    enter the ranking.
    """
    X = basis.space.check_states(states)
    y = np.asarray(targets, dtype=float).ravel()
    if len(X) == 0:
        raise DataError("empty dataset")
    if len(y) != len(X):
        raise DataError(f"{len(X)} rows but {len(y)} targets")
    if not np.all(np.isfinite(y)):
        raise DataError("targets must be finite")
    if d_max not in (1, 2, 3):
        raise ParameterError(f"d_max must be 1, 2 or 3, not {d_max}")
    if min(K1, K2, K3, per_feature_top) < 0:
        raise ParameterError("budgets must be non-negative")

    n = basis.n
    cards = basis.space.cardinalities
    yc = y - y.mean()
    ynorm = float(np.linalg.norm(yc))
    notes = []
    if ynorm <= 1e-12 * max(1.0, np.sqrt(len(y)) * np.abs(y).max()):
        ynorm = 0.0
        msg = "constant target: all correlations are 0; falling back to lexicographic order"
        logger.warning(msg)
        notes.append(msg)

    # stage 1: univariate atoms
    uni_K, uni_cols = [], []
    for i in range(n):
        for j in range(1, cards[i]):
            k = np.zeros(n, dtype=np.int64)
            k[i] = j
            uni_K.append(k)
            uni_cols.append(basis.tables[i][j, X[:, i]])
    uni_K = np.array(uni_K)
    uni_cols = np.stack(uni_cols, axis=1)
    uni_score, uni_ok = _abs_corr(uni_cols, yc, ynorm)
    keep1 = _rank(uni_K, uni_score, uni_ok, K1)
    parts = [(uni_K[keep1], uni_score[keep1], 1)]

    # strongest modes of each feature feed the interaction stages
    feat = np.argmax(uni_K != 0, axis=1)
    top_modes = []
    for i in range(n):
        mine = feat == i
        top_modes.append(_rank(uni_K, uni_score, mine & uni_ok, per_feature_top))

    pair_K = np.zeros((0, n), dtype=np.int64)
    if d_max >= 2 and K2 > 0:
        cand = [(a, b) for i, j in combinations(range(n), 2)
                for a in top_modes[i] for b in top_modes[j]]
        pair_K, pair_score, pair_ok = _score_products(cand, uni_K, uni_cols, yc, ynorm)
        keep2 = _rank(pair_K, pair_score, pair_ok, K2)
        pair_K = pair_K[keep2]
        parts.append((pair_K, pair_score[keep2], 2))

    if d_max >= 3 and K3 > 0 and len(pair_K):
        seen = set()
        cand = []
        for k in pair_K:
            pair = tuple(np.flatnonzero(k))
            base = [_uni_pos(uni_K, k, i) for i in pair]
            for l in range(n):
                if l in pair:
                    continue
                for c in top_modes[l]:
                    trip = tuple(sorted(base + [int(c)]))
                    if trip not in seen:
                        seen.add(trip)
                        cand.append(trip)
        trip_K, trip_score, trip_ok = _score_products(cand, uni_K, uni_cols, yc, ynorm)
        keep3 = _rank(trip_K, trip_score, trip_ok, K3)
        parts.append((trip_K[keep3], trip_score[keep3], 3))

    selected = np.concatenate([p[0].reshape(-1, n) for p in parts]).astype(np.int64)
    scores = np.concatenate([p[1] for p in parts])
    stage = np.concatenate([np.full(len(p[0]), p[2]) for p in parts])
    return AtomSelection(K1, K2, K3, d_max, per_feature_top, selected, scores, stage, notes)


def _uni_pos(uni_K: np.ndarray, k: np.ndarray, i: int) -> int:
    hit = np.flatnonzero((uni_K[:, i] == k[i]) & (np.count_nonzero(uni_K, axis=1) == 1))
    return int(hit[0])


def _score_products(cand, uni_K, uni_cols, yc, ynorm):
    """Multi-indices and scores of products of univariate atoms listed by position."""
    n = uni_K.shape[1]
    if not cand:
        return np.zeros((0, n), dtype=np.int64), np.zeros(0), np.zeros(0, dtype=bool)
    idx = np.array(cand, dtype=np.int64)
    K = uni_K[idx].sum(axis=1)
    score = np.zeros(len(idx))
    ok = np.zeros(len(idx), dtype=bool)
    for start in range(0, len(idx), _BLOCK):
        block = idx[start:start + _BLOCK]
        cols = np.prod(uni_cols[:, block], axis=2)
        score[start:start + _BLOCK], ok[start:start + _BLOCK] = _abs_corr(cols, yc, ynorm)
    return K, score, ok


def fit_coefficients(selection, states, targets, basis: TensorBasis, ridge: float = 1e-6,
                     sample_weight=None) -> SparseFourierModel:
    """Ridge least squares of the targets on the selected atoms plus the constant atom.

    Solved through the Cholesky factor of the (diagonally scaled) normal
    equations. The constant coefficient is not penalized. ``selection`` is an
    ``AtomSelection`` or an array of multi-indices.
    """
    K = selection.selected if isinstance(selection, AtomSelection) else selection
    K = np.asarray(K, dtype=np.int64).reshape(-1, basis.n)
    X = basis.space.check_states(states)
    y = np.asarray(targets, dtype=float).ravel()
    if len(X) == 0:
        raise DataError("empty dataset")
    if len(y) != len(X):
        raise DataError(f"{len(X)} rows but {len(y)} targets")
    if not np.all(np.isfinite(y)):
        raise DataError("targets must be finite")
    if ridge < 0:
        raise ParameterError("ridge must be non-negative")
    K = np.unique(np.vstack([np.zeros((1, basis.n), dtype=np.int64), K]), axis=0)
    if len(K) > len(X):
        warnings.warn(f"{len(K)} atoms for {len(X)} rows; the fit is underdetermined "
                      "without ridge", RuntimeWarning, stacklevel=2)
    w = np.ones(len(X)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    if w.shape != (len(X),) or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise DataError("sample weights must be finite, non-negative, one per row")
    A = basis.atom_columns(K, X)
    G = (A.T * w) @ A
    rhs = A.T @ (w * y)
    G[np.arange(1, len(K)), np.arange(1, len(K))] += ridge  # row 0 of K is the constant atom
    scale = np.sqrt(np.diag(G))
    if np.any(scale <= 0) or not np.all(np.isfinite(G)):
        raise FitError("an atom column vanishes on the weighted data; add ridge or data")
    Gs = G / np.outer(scale, scale)
    try:
        factor = cho_factor(Gs)
    except LinAlgError:
        raise FitError("normal equations are singular; add ridge or data") from None
    piv = np.diag(factor[0]) ** 2
    if piv.min() < 1e-13 * piv.max():
        raise FitError(f"normal equations are numerically singular "
                       f"(pivot ratio {piv.min() / piv.max():.2g}); add ridge or data")
    coef = cho_solve(factor, rhs / scale) / scale
    if not np.all(np.isfinite(coef)):
        raise FitError("non-finite coefficients")
    return SparseFourierModel(basis, K, coef)
