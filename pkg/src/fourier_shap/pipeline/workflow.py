"""End-to-end run: bin rows, build logit targets, select atoms, fit, report per bin."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, SchemaError
from ..measure import ProductMeasure, TensorBasis
from ..spectral import SparseFourierModel
from .binning import BinnedDataset, BinningScheme, bin_rows
from .mlp import MLPWeights, logit
from .report import BinReport, per_bin_report
from .selection import AtomSelection, fit_coefficients, select_atoms


@dataclass
class PipelineResult:
    dataset: BinnedDataset
    targets: np.ndarray
    selection: AtomSelection
    model: SparseFourierModel
    report: BinReport | None


def empirical_measure(states: np.ndarray, cardinalities, smoothing: float = 0.5) -> ProductMeasure:
    """Per-feature state frequencies with additive smoothing so every state has positive mass."""
    if smoothing <= 0:
        raise DataError("smoothing must be positive to guarantee full support")
    probs = []
    for i, m in enumerate(cardinalities):
        counts = np.bincount(states[:, i], minlength=m).astype(float) + smoothing
        probs.append(counts / counts.sum())
    return ProductMeasure(tuple(probs))


def run_pipeline(rows, scheme: BinningScheme, *, probability_column: str | None = None,
                 mlp: MLPWeights | None = None, split: str | None = None,
                 K1: int = 300, K2: int = 4000, K3: int = 2000, d_max: int = 3,
                 per_feature_top: int = 5, ridge: float = 1e-6, kernel_budget: int = 512,
                 seed: int = 0, smoothing: float = 0.5, workers: int = 1,
                 max_rows_per_bin: int | None = None) -> PipelineResult:
    """Fit a sparse spectral surrogate of logit predictions and tabulate attributions.

    Targets come from ``probability_column`` (passed through the clamped
    logit) or from ``mlp``. When ``split`` names a feature, the report has
    one table per state of that feature and leaves that feature out.
    """
    if (probability_column is None) == (mlp is None):
        raise SchemaError("give exactly one prediction source: a probability column or a network")
    keep = [probability_column] if probability_column else []
    data = bin_rows(rows, scheme, keep_columns=keep)
    if len(data) == 0:
        raise DataError("no rows survived binning")
    if split is not None and split not in data.names:
        raise SchemaError(f"split feature {split!r} is not a binned feature")
    if mlp is not None:
        if tuple(mlp.cardinalities) != tuple(data.cardinalities):
            raise SchemaError(f"network expects cardinalities {list(mlp.cardinalities)}, "
                              f"data has {list(data.cardinalities)}")
        targets = mlp.logits(data.states)
    else:
        try:
            p = np.array([float(v) for v in data.extra[probability_column]])
        except ValueError as exc:
            raise DataError(f"probability column: {exc}") from None
        if np.any((p < 0) | (p > 1)):
            raise DataError("probabilities must lie in [0, 1]")
        targets = logit(p)

    basis = TensorBasis(empirical_measure(data.states, data.cardinalities, smoothing))
    selection = select_atoms(data.states, targets, basis, K1, K2, K3, d_max, per_feature_top)
    model = fit_coefficients(selection, data.states, targets, basis, ridge=ridge)

    report = None
    if split is not None:
        s = data.names.index(split)
        rule = scheme.features[s]
        features = [j for j in range(len(data.names)) if j != s]
        report = per_bin_report(model, data.states, data.states[:, s], list(rule.labels),
                                data.names, kernel_budget, seed, features, workers,
                                max_rows_per_bin)
    return PipelineResult(data, targets, selection, model, report)
