"""Dense tables, sparse spectra and the transforms between them."""
from __future__ import annotations

import json
import re
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import DenseLimitError, DimensionError, ParameterError, SchemaError
from .measure import BASIS_CONVENTION, FeatureSpace, ProductMeasure, TensorBasis

DENSE_LIMIT = 2 ** 20
PRUNE_TOL = 1e-15
# supports whose joint table is larger than this are evaluated atom by atom
_SUPPORT_TABLE_LIMIT = 2 ** 16


def _apply_axes(tensor: np.ndarray, mats) -> np.ndarray:
    """Multiply ``mats[i]`` into axis ``i`` of ``tensor`` for every axis."""
    out = tensor
    for axis, mat in enumerate(mats):
        out = np.moveaxis(np.tensordot(mat, out, axes=(1, axis)), 0, axis)
    return out


class DensePredictor:
    """A predictor given by its full value table."""

    def __init__(self, values, space: FeatureSpace):
        values = np.array(values, dtype=float).ravel()
        if values.size != space.size:
            raise DimensionError(f"table has {values.size} entries; the space has {space.size}")
        values.setflags(write=False)
        self.values = values
        self.space = space

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        return self.values[self.space.ravel(X)]


class SparseFourierModel:
    """Map from multi-indices to Fourier coefficients over a fixed basis.

    Entries are kept sorted lexicographically by multi-index; coefficients
    smaller than ``PRUNE_TOL`` in magnitude are dropped.
    """

    def __init__(self, basis: TensorBasis, indices, coefs):
        n = basis.n
        K = np.asarray(indices, dtype=np.int64).reshape(-1, n)
        c = np.asarray(coefs, dtype=float).ravel()
        if len(K) != len(c):
            raise DimensionError(f"{len(K)} indices but {len(c)} coefficients")
        if len(K):
            cards = np.asarray(basis.space.cardinalities)
            if np.any(K < 0) or np.any(K >= cards):
                raise DimensionError("multi-index entry out of range")
        keep = np.abs(c) >= PRUNE_TOL
        K, c = K[keep], c[keep]
        if len(K):
            order = np.lexsort(K.T[::-1])
            K, c = K[order], c[order]
            if len(K) > 1 and np.any(np.all(K[1:] == K[:-1], axis=1)):
                raise DimensionError("duplicate multi-index in spectrum")
        K.setflags(write=False)
        c.setflags(write=False)
        self.basis = basis
        self.space = basis.space
        self.indices = K
        self.coefs = c
        self._tables = None

    @classmethod
    def from_dict(cls, basis: TensorBasis, entries: Mapping) -> "SparseFourierModel":
        keys = list(entries)
        return cls(basis, np.array(keys, dtype=np.int64).reshape(-1, basis.n),
                   [entries[k] for k in keys])

    @classmethod
    def from_tensor(cls, basis: TensorBasis, coef_tensor) -> "SparseFourierModel":
        coef_tensor = np.asarray(coef_tensor, dtype=float).reshape(basis.space.shape)
        flat = coef_tensor.ravel()
        nz = np.flatnonzero(np.abs(flat) >= PRUNE_TOL)
        K = np.stack(np.unravel_index(nz, basis.space.shape), axis=1)
        return cls(basis, K, flat[nz])

    def __len__(self) -> int:
        return len(self.coefs)

    def __getitem__(self, k) -> float:
        k = tuple(int(v) for v in k)
        hit = np.flatnonzero(np.all(self.indices == np.asarray(k), axis=1))
        return float(self.coefs[hit[0]]) if hit.size else 0.0

    def items(self):
        for k, c in zip(self.indices, self.coefs):
            yield tuple(int(v) for v in k), float(c)

    def to_dict(self) -> dict:
        return dict(self.items())

    @property
    def orders(self) -> np.ndarray:
        return np.count_nonzero(self.indices, axis=1)

    @property
    def interaction_order(self) -> int:
        return int(self.orders.max()) if len(self) else 0

    @property
    def constant(self) -> float:
        """``h_hat(0)``, the mean of the predictor under the measure."""
        if len(self) and not np.any(self.indices[0]):
            return float(self.coefs[0])
        return 0.0

    def coef_tensor(self) -> np.ndarray:
        _check_dense(self.space)
        out = np.zeros(self.space.shape)
        if len(self):
            out[tuple(self.indices.T)] = self.coefs
        return out

    def to_dense(self) -> np.ndarray:
        """Flat value table of the model over the whole space."""
        return _apply_axes(self.coef_tensor(), [t.T for t in self.basis.tables]).ravel()

    def _support_tables(self):
        if self._tables is not None:
            return self._tables
        groups: dict[tuple[int, ...], list[int]] = {}
        for e, k in enumerate(self.indices):
            groups.setdefault(tuple(np.flatnonzero(k).tolist()), []).append(e)
        tables, loose = [], []
        cards = self.space.cardinalities
        for supp, members in groups.items():
            shape = tuple(cards[j] for j in supp)
            if int(np.prod(shape, dtype=np.int64)) > _SUPPORT_TABLE_LIMIT:
                loose.extend(members)
                continue
            if supp:
                coef = np.zeros(shape)
                sub = self.indices[members][:, list(supp)]
                coef[tuple(sub.T)] = self.coefs[members]
            else:
                coef = np.array(self.coefs[members[0]])
            table = _apply_axes(coef, [self.basis.tables[j].T for j in supp])
            tables.append((supp, shape, table.ravel()))
        self._tables = (tables, np.array(loose, dtype=np.int64))
        return self._tables

    def __call__(self, X) -> np.ndarray:
        """Evaluate the expansion at each row of ``X`` (shape ``(N, n)``)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        if X.shape[1] != self.space.n:
            raise DimensionError(f"states have {X.shape[1]} columns, expected {self.space.n}")
        tables, loose = self._support_tables()
        out = np.zeros(len(X))
        for supp, shape, table in tables:
            if not supp:
                out += table[0]
                continue
            pos = np.ravel_multi_index(tuple(X[:, list(supp)].T), shape)
            out += table[pos]
        if loose.size:
            out += self.basis.atom_columns(self.indices[loose], X) @ self.coefs[loose]
        return out

    def evaluate(self, x) -> float:
        return inverse_transform(self, x)


def _check_dense(space: FeatureSpace, limit: int = DENSE_LIMIT) -> None:
    if space.size > limit:
        raise DenseLimitError(f"space has {space.size} states; the dense limit is {limit}")


def forward_transform(h, basis: TensorBasis, dense_limit: int = DENSE_LIMIT) -> SparseFourierModel:
    """All Fourier coefficients ``E_mu[h(X) Psi_k(X)]`` of a dense table.

    The transform is applied one axis at a time, so the cost is
    ``O(|Y| * sum_i m_i)`` rather than quadratic in ``|Y|``.
    """
    space = basis.space
    _check_dense(space, dense_limit)
    h = tabulate(h, space, dense_limit)
    mats = [c.psi * c.mu for c in basis.coords]
    return SparseFourierModel.from_tensor(basis, _apply_axes(h.reshape(space.shape), mats))


def inverse_transform(model: SparseFourierModel, x) -> float:
    """``sum_k h_hat(k) Psi_k(x)``, linear in the number of stored entries."""
    x = model.space.check_state(x)
    if not len(model):
        return 0.0
    return float(np.dot(model.coefs, model.basis.atoms_at(model.indices, x)))


def parseval_norm(model: SparseFourierModel) -> float:
    return float(np.sqrt(np.sum(model.coefs ** 2)))


class Selector:
    """Predicate on ``(multi-index, value)`` pairs choosing a retained set.

    Build one from a predicate ``f(k, value) -> bool``, an explicit set of
    multi-indices, or the text form ``order<=d``, ``abs>=t``, ``top=N``,
    joined with ``&``. ``top=N`` keeps the ``N`` largest magnitudes among
    entries passing the other clauses (ties broken lexicographically).
    """

    _CLAUSE = re.compile(r"^\s*(order\s*<=|abs\s*>=|top\s*=)\s*([0-9.eE+-]+)\s*$")

    def __init__(self, max_order=None, min_abs=None, top=None, predicate=None, explicit=None):
        self.max_order = max_order
        self.min_abs = min_abs
        self.top = top
        self.predicate = predicate
        self.explicit = None if explicit is None else {tuple(int(v) for v in k) for k in explicit}

    @classmethod
    def parse(cls, text: str) -> "Selector":
        kwargs = {}
        for clause in text.split("&"):
            match = cls._CLAUSE.match(clause)
            if not match:
                raise ParameterError(f"cannot parse selector clause {clause!r}")
            op, value = match.group(1).replace(" ", ""), match.group(2)
            try:
                if op == "order<=":
                    kwargs["max_order"] = int(value)
                elif op == "abs>=":
                    kwargs["min_abs"] = float(value)
                else:
                    kwargs["top"] = int(value)
            except ValueError:
                raise ParameterError(f"bad number in selector clause {clause!r}") from None
        return cls(**kwargs)

    @classmethod
    def coerce(cls, sel) -> "Selector":
        if isinstance(sel, Selector):
            return sel
        if isinstance(sel, str):
            return cls.parse(sel)
        if callable(sel):
            return cls(predicate=sel)
        return cls(explicit=sel)

    def mask(self, K: np.ndarray, values: np.ndarray) -> np.ndarray:
        K = np.asarray(K, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        keep = np.ones(len(K), dtype=bool)
        if self.max_order is not None:
            keep &= np.count_nonzero(K, axis=1) <= self.max_order
        if self.min_abs is not None:
            keep &= np.abs(values) >= self.min_abs
        if self.explicit is not None:
            keep &= np.array([tuple(int(v) for v in k) in self.explicit for k in K], dtype=bool)
        if self.predicate is not None:
            keep &= np.array([bool(self.predicate(tuple(int(v) for v in k), float(c)))
                              for k, c in zip(K, values)], dtype=bool)
        if self.top is not None:
            cand = np.flatnonzero(keep)
            # stable sort over lexicographically ordered rows keeps the tie-break
            lex = cand[np.lexsort(K[cand].T[::-1])]
            ranked = lex[np.argsort(-np.abs(values[lex]), kind="stable")]
            keep = np.zeros(len(K), dtype=bool)
            keep[ranked[: self.top]] = True
        return keep


def truncate(model: SparseFourierModel, selector) -> tuple[SparseFourierModel, float]:
    """Keep the selected entries; return the truncation and ``||h - h_S||``."""
    keep = Selector.coerce(selector).mask(model.indices, model.coefs)
    kept = SparseFourierModel(model.basis, model.indices[keep], model.coefs[keep])
    residual = float(np.sqrt(np.sum(model.coefs[~keep] ** 2)))
    return kept, residual


def as_predictor(h, space: FeatureSpace) -> Callable[[np.ndarray], np.ndarray]:
    """Wrap dense tables as :class:`DensePredictor`; pass callables through."""
    if isinstance(h, (SparseFourierModel, DensePredictor)):
        return h
    if callable(h):
        return h
    return DensePredictor(h, space)


def tabulate(h, space: FeatureSpace, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Flat value table of any predictor."""
    if isinstance(h, DensePredictor):
        return np.asarray(h.values)
    if isinstance(h, SparseFourierModel):
        return h.to_dense()
    if not callable(h):
        table = np.asarray(h, dtype=float).ravel()
        if table.size != space.size:
            raise DimensionError(f"table has {table.size} entries; the space has {space.size}")
        return table
    _check_dense(space, dense_limit)
    return np.asarray(h(space.states()), dtype=float).ravel()


# --- JSON Lines model files -------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def dumps_model(model: SparseFourierModel) -> str:
    measure = model.basis.measure
    header = {
        "record": "header",
        "cardinalities": list(model.space.cardinalities),
        "measures": "__MEASURES__",
        "measure_hash": measure.digest(),
        "basis": model.basis.convention,
        "entries": len(model),
    }
    measures = "[" + ",".join("[" + ",".join(_fmt(v) for v in p) + "]" for p in measure.probs) + "]"
    lines = [json.dumps(header).replace('"__MEASURES__"', measures)]
    for k, c in zip(model.indices, model.coefs):
        lines.append('{"k":[%s],"coef":%s}' % (",".join(str(int(v)) for v in k), _fmt(c)))
    return "\n".join(lines) + "\n"


def save_model(model: SparseFourierModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_model(model))


def loads_model(text: str) -> SparseFourierModel:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaError("empty model file")
    try:
        header = json.loads(lines[0])
        records = [json.loads(ln) for ln in lines[1:]]
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed model file: {exc}") from None
    if header.get("record") != "header":
        raise SchemaError("model file must start with a header record")
    if header.get("basis") != BASIS_CONVENTION:
        raise SchemaError(f"unsupported basis convention {header.get('basis')!r}")
    measure = ProductMeasure.from_dict(header)
    if header.get("measure_hash") not in (None, measure.digest()):
        raise SchemaError("measure hash does not match the stored measures")
    basis = TensorBasis(measure)
    try:
        K = np.array([r["k"] for r in records], dtype=np.int64).reshape(-1, basis.n)
        c = np.array([r["coef"] for r in records], dtype=float)
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"malformed model record: {exc}") from None
    return SparseFourierModel(basis, K, c)


def load_model(path) -> SparseFourierModel:
    with open(path) as fh:
        return loads_model(fh.read())


def random_sparse_model(basis: TensorBasis, n_entries: int, rng: np.random.Generator,
                        max_order: int | None = None, include_constant: bool = True,
                        scale: float = 1.0) -> SparseFourierModel:
    """Random spectrum with ``n_entries`` distinct multi-indices (test/demo helper)."""
    space = basis.space
    cards = np.asarray(space.cardinalities)
    max_order = space.n if max_order is None else max_order
    chosen: dict[tuple[int, ...], float] = {}
    if include_constant:
        chosen[(0,) * space.n] = float(rng.normal() * scale)
    limit = _count_indices(space.cardinalities, max_order) - (0 if include_constant else 1)
    target = min(n_entries, limit)
    while len(chosen) < target:
        d = int(rng.integers(1, max_order + 1))
        feats = rng.choice(space.n, size=min(d, space.n), replace=False)
        k = np.zeros(space.n, dtype=np.int64)
        k[feats] = rng.integers(1, cards[feats])
        chosen.setdefault(tuple(int(v) for v in k), float(rng.normal() * scale))
    return SparseFourierModel.from_dict(basis, chosen)


def _count_indices(cards: Iterable[int], max_order: int) -> int:
    # elementary symmetric sums of (m_i - 1) up to max_order
    e = np.zeros(max_order + 1)
    e[0] = 1.0
    for m in cards:
        e[1:] = e[1:] + (m - 1) * e[:-1]
    return int(round(e.sum()))
