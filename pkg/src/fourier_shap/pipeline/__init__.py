"""Tabular pipeline: binning, logit targets, atom selection, reports and benchmarks."""
from .bench import BenchRow, benchmark, write_bench_csv
from .binning import (BinnedDataset, BinningScheme, CategoryRule, Exclusion, IntervalRule,
                      RowRejected, bin_rows, load_scheme, read_csv, stroke_scheme)
from .mlp import LOGIT_EPS, Layer, MLPWeights, encode, load_mlp, logit, mlp_logit, save_mlp, sigmoid
from .report import REPORT_COLUMNS, BinReport, per_bin_report, write_report_csv
from .selection import AtomSelection, fit_coefficients, select_atoms
from .synthetic import synthetic_stroke_rows, write_rows
from .workflow import PipelineResult, empirical_measure, run_pipeline

__all__ = [
    "AtomSelection", "BenchRow", "BinReport", "BinnedDataset", "BinningScheme", "CategoryRule",
    "Exclusion", "IntervalRule", "LOGIT_EPS", "Layer", "MLPWeights", "PipelineResult",
    "REPORT_COLUMNS", "RowRejected", "benchmark", "bin_rows", "empirical_measure", "encode", "fit_coefficients",
    "load_mlp", "load_scheme", "logit", "mlp_logit", "per_bin_report", "read_csv", "run_pipeline",
    "save_mlp", "select_atoms", "sigmoid", "stroke_scheme", "synthetic_stroke_rows",
    "write_bench_csv", "write_report_csv", "write_rows",
]
