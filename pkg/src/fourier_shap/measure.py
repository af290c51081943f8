"""Discrete feature spaces, product measures and the tensor-product basis.

States of a feature with ``m`` levels are the integers ``0, ..., m - 1``.
Dense tables over the whole space use mixed-radix order with feature 0 as
the slowest digit, which is numpy's C order for an array of shape
``(m_0, ..., m_{n-1})``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BasisConstructionError, DimensionError, MeasureSupportError, SchemaError

#: Tag written into file headers; identifies the per-coordinate basis convention.
BASIS_CONVENTION = "gram-schmidt-monomial/positive-at-top-state"

MEASURE_TOL = 1e-12


@dataclass(frozen=True)
class FeatureSpace:
    """Cartesian product of finite feature domains."""

    cardinalities: tuple[int, ...]

    def __post_init__(self):
        cards = tuple(int(m) for m in self.cardinalities)
        if len(cards) < 1:
            raise DimensionError("a feature space needs at least one feature")
        for i, m in enumerate(cards):
            if m < 2:
                raise DimensionError(f"feature {i} has {m} state(s); at least 2 are required")
        object.__setattr__(self, "cardinalities", cards)

    @property
    def n(self) -> int:
        return len(self.cardinalities)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cardinalities

    @property
    def size(self) -> int:
        return int(np.prod(self.cardinalities, dtype=np.int64))

    def states(self) -> np.ndarray:
        """All states as an ``(size, n)`` integer array in mixed-radix order."""
        grids = np.indices(self.cardinalities).reshape(self.n, -1)
        return np.ascontiguousarray(grids.T)

    def check_state(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise DimensionError(f"state has shape {x.shape}, expected ({self.n},)")
        if not np.issubdtype(x.dtype, np.integer):
            if not np.all(np.equal(np.mod(x, 1), 0)):
                raise DimensionError(f"state {x.tolist()} is not integer valued")
            x = x.astype(np.int64)
        if np.any(x < 0) or np.any(x >= np.asarray(self.cardinalities)):
            raise DimensionError(f"state {x.tolist()} out of range for {self.cardinalities}")
        return x.astype(np.int64)

    def check_states(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise DimensionError(f"states have shape {X.shape}, expected (N, {self.n})")
        X = X.astype(np.int64)
        if np.any(X < 0) or np.any(X >= np.asarray(self.cardinalities)):
            raise DimensionError("state entries out of range")
        return X

    def ravel(self, X) -> np.ndarray:
        """Flat dense-table positions of states ``X`` (shape ``(N, n)``)."""
        X = np.asarray(X, dtype=np.int64)
        return np.ravel_multi_index(tuple(X.T), self.cardinalities)


@dataclass(frozen=True, eq=False)
class ProductMeasure:
    """Independent full-support probability vectors, one per feature."""

    probs: tuple[np.ndarray, ...]
    space: FeatureSpace = field(init=False)

    def __post_init__(self):
        vecs = []
        for i, p in enumerate(self.probs):
            p = np.array(p, dtype=float)
            if p.ndim != 1:
                raise MeasureSupportError(f"measure {i} must be a vector")
            if not np.all(np.isfinite(p)) or np.any(p <= 0.0):
                raise MeasureSupportError(f"measure {i} lacks full support: {p.tolist()}")
            if abs(p.sum() - 1.0) > MEASURE_TOL:
                raise MeasureSupportError(f"measure {i} sums to {p.sum()!r}, not 1")
            p.setflags(write=False)
            vecs.append(p)
        object.__setattr__(self, "probs", tuple(vecs))
        object.__setattr__(self, "space", FeatureSpace(tuple(len(p) for p in vecs)))

    @classmethod
    def uniform(cls, cardinalities: Iterable[int]) -> "ProductMeasure":
        return cls(tuple(np.full(m, 1.0 / m) for m in cardinalities))

    @classmethod
    def random(cls, cardinalities: Iterable[int], rng: np.random.Generator,
               floor: float = 0.05) -> "ProductMeasure":
        """Random full-support measure; every mass is at least ``floor / m``."""
        vecs = []
        for m in cardinalities:
            p = floor / m + (1.0 - floor) * rng.dirichlet(np.ones(m))
            vecs.append(p / p.sum())
        return cls(tuple(vecs))

    @property
    def n(self) -> int:
        return len(self.probs)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.probs[i]

    def weights(self) -> np.ndarray:
        """Dense table of ``mu(x)`` over the whole space (flat, mixed-radix)."""
        w = np.ones(1)
        for p in self.probs:
            w = np.multiply.outer(w, p).ravel()
        return w

    def to_dict(self) -> dict:
        return {
            "cardinalities": list(self.space.cardinalities),
            "measures": [[float(v) for v in p] for p in self.probs],
        }

    def digest(self) -> str:
        payload = json.dumps([[format(v, ".17g") for v in p] for p in self.probs])
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "ProductMeasure":
        if not isinstance(data, dict) or "measures" not in data:
            raise SchemaError("space description needs a 'measures' entry")
        measure = cls(tuple(data["measures"]))
        cards = data.get("cardinalities")
        if cards is not None and tuple(cards) != measure.space.cardinalities:
            raise SchemaError(
                f"cardinalities {cards} disagree with measure lengths "
                f"{list(measure.space.cardinalities)}")
        return measure


def load_measure(path) -> ProductMeasure:
    with open(path) as fh:
        return ProductMeasure.from_dict(json.load(fh))


def save_measure(measure: ProductMeasure, path) -> None:
    with open(path, "w") as fh:
        json.dump(measure.to_dict(), fh)
        fh.write("\n")


@dataclass(frozen=True, eq=False)
class CoordinateBasis:
    """Orthonormal functions on one feature; ``psi[j, x]`` is the j-th function at x."""

    feature: int
    psi: np.ndarray
    mu: np.ndarray

    @property
    def m(self) -> int:
        return self.psi.shape[0]

    def gram(self) -> np.ndarray:
        return (self.psi * self.mu) @ self.psi.T


def build_coordinate_basis(mu, feature: int = 0) -> CoordinateBasis:
    """Orthonormalize ``1, x, ..., x^d`` in ``L2(mu)`` by modified Gram-Schmidt.

    Every non-constant function is flipped to be positive at the top state.

    Raises
    ------
    MeasureSupportError
        If ``mu`` has a non-positive entry or does not sum to one.
    BasisConstructionError
        If the monomials are numerically dependent under ``mu``.
    """
    mu = np.array(mu, dtype=float)
    if mu.ndim != 1 or mu.size < 2:
        raise MeasureSupportError("a coordinate measure needs at least two states")
    if not np.all(np.isfinite(mu)) or np.any(mu <= 0.0):
        raise MeasureSupportError(f"measure lacks full support: {mu.tolist()}")
    if abs(mu.sum() - 1.0) > MEASURE_TOL:
        raise MeasureSupportError(f"measure sums to {mu.sum()!r}, not 1")

    m = mu.size
    t = np.arange(m, dtype=float) / (m - 1)  # rescaled monomials span the same spaces
    psi = np.zeros((m, m))
    for j in range(m):
        v = t ** j
        u = v.copy()
        for _ in range(2):  # second sweep restores orthogonality lost to rounding
            for q in psi[:j]:
                u -= np.dot(u * mu, q) * q
        norm = np.sqrt(np.dot(u * u, mu))
        if norm <= 1e-10 * np.sqrt(np.dot(v * v, mu)):
            raise BasisConstructionError(f"monomial of degree {j} is numerically dependent")
        u /= norm
        if j > 0 and u[-1] < 0:
            u = -u
        psi[j] = u
    psi[0] = 1.0
    psi.setflags(write=False)
    mu.setflags(write=False)
    return CoordinateBasis(feature, psi, mu)


def support(k) -> tuple[int, ...]:
    """Features active in multi-index ``k``."""
    return tuple(int(i) for i in np.flatnonzero(np.asarray(k)))


def order(k) -> int:
    """Interaction order ``|Supp(k)|``."""
    return int(np.count_nonzero(np.asarray(k)))


class TensorBasis:
    """Product basis ``Psi_k(x) = prod_i psi_{i,k_i}(x_i)`` of ``L2(mu)``."""

    def __init__(self, measure: ProductMeasure, coords: Sequence[CoordinateBasis] | None = None):
        self.measure = measure
        self.space = measure.space
        if coords is None:
            coords = [build_coordinate_basis(p, i) for i, p in enumerate(measure.probs)]
        self.coords = tuple(coords)
        self.tables = tuple(c.psi for c in self.coords)
        self.convention = BASIS_CONVENTION

    @classmethod
    def from_probs(cls, probs) -> "TensorBasis":
        return cls(ProductMeasure(tuple(probs)))

    @property
    def n(self) -> int:
        return self.space.n

    def check_index(self, k) -> np.ndarray:
        # multi-indices share the range of states
        try:
            return self.space.check_state(k)
        except DimensionError as exc:
            raise DimensionError(f"invalid multi-index: {exc}") from None

    def atom(self, k, x) -> float:
        k = self.check_index(k)
        x = self.space.check_state(x)
        val = 1.0
        for tab, ki, xi in zip(self.tables, k, x):
            val *= tab[ki, xi]
        return float(val)

    def atoms_at(self, K: np.ndarray, x) -> np.ndarray:
        """Values ``Psi_k(x)`` for each row ``k`` of ``K`` at a single state ``x``."""
        x = self.space.check_state(x)
        out = np.ones(len(K))
        for i, tab in enumerate(self.tables):
            out *= tab[K[:, i], x[i]]
        return out

    def atom_columns(self, K: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Matrix ``A[r, e] = Psi_{K[e]}(X[r])``."""
        A = np.ones((len(X), len(K)))
        for i, tab in enumerate(self.tables):
            active = K[:, i] != 0
            if np.any(active):
                A[:, active] *= tab[np.ix_(K[active, i], X[:, i])].T
        return A

    def atom_table(self, k) -> np.ndarray:
        """Dense flat table of ``Psi_k`` over the whole space."""
        k = self.check_index(k)
        out = np.ones(1)
        for tab, ki in zip(self.tables, k):
            out = np.multiply.outer(out, tab[ki]).ravel()
        return out

    def atoms_at_all(self, x) -> np.ndarray:
        """Tensor over all multi-indices of ``Psi_k(x)``, shape ``space.shape``."""
        x = self.space.check_state(x)
        out = np.ones(1)
        for tab, xi in zip(self.tables, x):
            out = np.multiply.outer(out, tab[:, xi]).ravel()
        return out.reshape(self.space.shape)


def evaluate_tensor_atom(basis: TensorBasis, k, x) -> float:
    """``Psi_k(x)``; equals 1 when ``k`` is all zero."""
    return basis.atom(k, x)


def inner_product(f, g, measure: ProductMeasure) -> float:
    """``<f, g>`` in ``L2(mu)`` for flat dense tables in mixed-radix order."""
    f = np.asarray(f, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    size = measure.space.size
    if f.size != size or g.size != size:
        raise DimensionError(f"tables of length {f.size}, {g.size}; the space has {size} states")
    return float(np.dot(f * g, measure.weights()))
