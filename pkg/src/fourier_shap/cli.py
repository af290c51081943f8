"""Command-line entry point: ``fourier-shap <subcommand> [options]``.

Every subcommand reads and validates all of its inputs before it creates
any output file, then writes its primary output and a JSON run manifest.
Options may also come from ``--config FILE`` (a JSON object keyed by option
name, dashes or underscores); explicit flags win over the file.

Exit status: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (BasisConstructionError, CoalitionLimitError, DataError, DenseLimitError,
                     DimensionError, FitError, FourierShapError, KernelRecursionError,
                     KernelShapDegenerateError, MeasureSupportError, NumericError,
                     ParameterError, SchemaError, SpectrumError)
from .gp import (_index_mask, expected_residual_trace, expected_shap_bound,
                 high_probability_bound, kernel_from_spec, kl_coefficients, residual_energy,
                 sample_values, shap_gaps, tail_statistics, tail_weights_sq)
from .measure import ProductMeasure, TensorBasis
from .shap import brute_force_shap, fourier_shap, kernel_shap, truncation_bound
from .spectral import (DensePredictor, Selector, dumps_model, forward_transform, loads_model,
                       truncate)

log = logging.getLogger("fourier_shap")

THREADS_ENV = "FOURIER_SHAP_THREADS"

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

_CONFIG_ERRORS = (ParameterError,)
_DATA_ERRORS = (DataError, SchemaError, DimensionError, MeasureSupportError, SpectrumError,
                DenseLimitError, CoalitionLimitError, OSError, json.JSONDecodeError)
_NUMERIC_ERRORS = (NumericError, FitError, KernelRecursionError, KernelShapDegenerateError,
                   BasisConstructionError)

# keys never taken from a config file
_RESERVED = {"command", "config", "func"}


class ConfigError(ParameterError):
    """Invalid or incomplete run configuration."""


def _fmt(v) -> str:
    return repr(float(v))  # shortest string that round-trips


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _canonical(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be at least 1")
    return n


# --- input parsing -----------------------------------------------------------

def _parse_state(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.replace(" ", "").split(",") if tok != ""]
    except ValueError:
        raise DataError(f"instance {text!r} is not a comma-separated list of integers") from None


def _read_instances(args, n: int) -> np.ndarray:
    rows = [_parse_state(t) for t in (args.instance or [])]
    if args.instances:
        with open(args.instances, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or all(not c.strip() for c in rec):
                    continue
                if not rec[0].strip().lstrip("-").isdigit():
                    continue  # header line
                rows.append(_parse_state(",".join(rec)))
    if not rows:
        raise ConfigError("give at least one --instance or an --instances file")
    for r in rows:
        if len(r) != n:
            raise DataError(f"instance {r} has {len(r)} entries; the model has {n} features")
    return np.array(rows, dtype=np.int64)


def _read_values(path, size: int) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".npy":
        vals = np.load(path, allow_pickle=False)
    else:
        text = path.read_text().replace(",", " ")
        try:
            vals = np.array([float(tok) for tok in text.split()])
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from None
    vals = np.asarray(vals, dtype=float).ravel()
    if vals.size != size:
        raise DataError(f"{path}: {vals.size} values; the space has {size} states")
    if not np.all(np.isfinite(vals)):
        raise DataError(f"{path}: non-finite values")
    return vals


def _load_model(path):
    with open(path) as fh:
        return loads_model(fh.read())


def _selector(text):
    if text is None:
        return None
    try:
        return Selector.parse(text)
    except (ParameterError, ValueError) as exc:
        raise ConfigError(f"bad selector {text!r}: {exc}") from None


def _features(arg, n: int) -> list[int]:
    if arg is None:
        return list(range(n))
    for i in arg:
        if not 0 <= i < n:
            raise ConfigError(f"feature {i} not in range(0, {n})")
    return list(arg)


def _require_seed(args, why: str):
    if args.seed is None:
        raise ConfigError(f"--seed is required {why}")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _out_path(path) -> Path:
    p = Path(path)
    if p.exists() and p.is_dir():
        raise ConfigError(f"output path {p} is a directory")
    if not p.parent.exists():
        raise ConfigError(f"output directory {p.parent} does not exist")
    return p


# --- subcommands ---------------------------------------------------------------
# Each returns ``(outputs, summary)``: ``outputs`` maps paths to file contents
# produced after validation; ``summary`` goes into the manifest.

def cmd_basis(args):
    out = _out_path(args.out)
    measure = ProductMeasure.from_dict(_read_json(args.space))
    basis = TensorBasis(measure)
    feats = []
    worst = 0.0
    for c in basis.coords:
        err = float(np.max(np.abs(c.gram() - np.eye(c.m))))
        worst = max(worst, err)
        feats.append({"feature": c.feature, "mu": [float(v) for v in c.mu],
                      "psi": [[float(v) for v in row] for row in c.psi], "gram_error": err})
    doc = {"convention": basis.convention, "cardinalities": list(measure.space.cardinalities),
           "measure_hash": measure.digest(), "features": feats}
    return {out: json.dumps(doc, indent=1) + "\n"}, {"max_gram_error": worst}


def cmd_transform(args):
    out = _out_path(args.out)
    measure = ProductMeasure.from_dict(_read_json(args.space))
    basis = TensorBasis(measure)
    values = _read_values(args.values, measure.space.size)
    sel = _selector(args.select)
    model = forward_transform(DensePredictor(values, measure.space), basis)
    summary = {"entries": len(model)}
    if sel is not None:
        model, resid = truncate(model, sel)
        summary.update(kept=len(model), residual_norm=resid)
    return {out: dumps_model(model)}, summary


def cmd_shap(args):
    out = _out_path(args.out)
    model = _load_model(args.model)
    X = _read_instances(args, model.space.n)
    sel = _selector(args.select)
    if args.method == "kernel":
        _require_seed(args, "for --method kernel")
        if args.budget is None:
            raise ConfigError("--budget is required for --method kernel")
    target = model if sel is None else truncate(model, sel)[0]
    rows = []
    worst = 0.0
    for r, x in enumerate(model.space.check_states(X)):
        if args.method == "fourier":
            att = fourier_shap(target, x)
        elif args.method == "brute":
            att = brute_force_shap(target, x, model.basis.measure)
        else:
            att = kernel_shap(target, x, model.basis.measure, args.budget, seed=args.seed)
        pred = float(target(x[None])[0])
        gap = abs(att.total - pred)
        if not (math.isfinite(gap) and np.all(np.isfinite(att.phi))):
            raise NumericError(f"instance {r}: non-finite attribution")
        worst = max(worst, gap)
        if args.method != "kernel" and gap > args.efficiency_tol * max(1.0, abs(pred)):
            raise NumericError(f"instance {r}: base + sum(phi) misses h(x) by {gap:.3g}")
        for i in range(model.space.n):
            bound = "" if sel is None else _fmt(truncation_bound(model, sel, i, x))
            rows.append([r, i, _fmt(att.phi[i]), _fmt(att.base_value), att.method, bound])
    text = _csv_text(["instance_id", "feature", "phi", "base_value", "method", "bound"], rows)
    return {out: text}, {"instances": len(X), "max_efficiency_gap": worst}


def _load_kernel(path):
    return kernel_from_spec(_read_json(path))


def cmd_bounds(args):
    out = _out_path(args.out)
    K = _load_kernel(args.kernel)
    sel = _selector(args.S)
    if sel is None:
        raise ConfigError("--S is required")
    deltas = args.delta or [0.05]
    for d in deltas:
        if not 0.0 < d < 1.0:
            raise ConfigError(f"delta {d} outside (0, 1)")
    space = K.basis.space
    X = _read_instances(args, space.n)
    feats = _features(args.feature, space.n)
    if args.mc_samples:
        _require_seed(args, "when --mc-samples is positive")
    tail = tail_statistics(K, sel)
    keep = _index_mask(K, sel)
    coefs = None
    if args.mc_samples:
        coefs = kl_coefficients(K, args.mc_samples, args.seed)
    rows = []
    for r, x in enumerate(space.check_states(X)):
        for i in feats:
            wsq = tail_weights_sq(K.basis, keep, i, x)
            gaps = np.abs(shap_gaps(K.basis, coefs, keep, i, x)) if coefs is not None else None
            val = expected_shap_bound(K, sel, i, x, weights_sq=wsq)
            mc = "" if gaps is None else _fmt(gaps.mean())
            rows.append([r, "expected", i, "", _fmt(val), mc, ""])
            for d in deltas:
                val = high_probability_bound(tail, wsq, d)
                if gaps is None:
                    mc = rate = ""
                else:
                    mc = _fmt(np.quantile(gaps, 1.0 - d))
                    rate = _fmt(np.mean(gaps > val))
                rows.append([r, "high_probability", i, _fmt(d), _fmt(val), mc, rate])
    header = ["instance_id", "bound_type", "feature", "delta", "value", "mc_estimate",
              "violation_rate"]
    return {out: _csv_text(header, rows)}, {"tail_sum": tail.sum1, "tail_max": tail.smax}


def cmd_gp(args):
    out = _out_path(args.out)
    K = _load_kernel(args.kernel)
    sel = _selector(args.S)
    if sel is None:
        raise ConfigError("--S is required")
    _require_seed(args, "for Monte-Carlo sampling")
    if args.samples < 2:
        raise ConfigError("--samples must be at least 2")
    trace = expected_residual_trace(K, sel)
    energy = np.concatenate([
        residual_energy(K, sample_values(K, min(10_000, args.samples - s), args.seed + s), sel)
        for s in range(0, args.samples, 10_000)])
    mean = float(energy.mean())
    se = float(energy.std(ddof=1) / math.sqrt(len(energy)))
    z = (mean - trace) / se if se > 0 else 0.0
    rows = [["residual_trace", _fmt(trace)], ["mc_residual_energy", _fmt(mean)],
            ["mc_standard_error", _fmt(se)], ["z_score", _fmt(z)],
            ["diagonal_in_basis", int(K.diagonal_in_basis)]]
    return {out: _csv_text(["quantity", "value"], rows)}, {"z_score": z}


def cmd_pipeline(args):
    from .pipeline import load_mlp, load_scheme, read_csv, run_pipeline, stroke_scheme
    from .pipeline.report import REPORT_COLUMNS

    out_dir = Path(args.out_dir)
    if out_dir.exists() and not out_dir.is_dir():
        raise ConfigError(f"{out_dir} exists and is not a directory")
    _require_seed(args, "for the Kernel SHAP baseline")
    if (args.mlp is None) == (args.prob_column is None):
        raise ConfigError("give exactly one of --mlp and --prob-column")
    scheme = load_scheme(args.schema)[0] if args.schema else stroke_scheme()
    rows = read_csv(args.data)
    mlp = load_mlp(args.mlp) if args.mlp else None
    res = run_pipeline(rows, scheme, probability_column=args.prob_column, mlp=mlp,
                       split=args.split, K1=args.k1, K2=args.k2, K3=args.k3, d_max=args.d_max,
                       per_feature_top=args.per_feature_top, ridge=args.ridge,
                       kernel_budget=args.kernel_budget, seed=args.seed,
                       workers=args.threads or _default_threads(),
                       max_rows_per_bin=args.max_rows_per_bin)
    outputs = {out_dir / "model.jsonl": dumps_model(res.model)}
    rej = [[r.row, r.column, r.value, r.reason] for r in res.dataset.rejected]
    outputs[out_dir / "rejected.csv"] = _csv_text(["row", "column", "value", "reason"], rej)
    outputs[out_dir / "selection.json"] = json.dumps(
        {"K1": args.k1, "K2": args.k2, "K3": args.k3, "d_max": args.d_max,
         "per_feature_top": args.per_feature_top, "selected": res.selection.to_records()}) + "\n"
    summary = {"rows_accepted": len(res.dataset), "rows_rejected": len(rej),
               "atoms": len(res.model)}
    if res.report is not None:
        body = [[r[c] if c not in ("FourierSHAP", "KernelSHAP", "Delta") else _fmt(r[c])
                 for c in REPORT_COLUMNS] for r in res.report.rows]
        outputs[out_dir / "report.csv"] = _csv_text(REPORT_COLUMNS, body)
        summary["additivity_gap"] = res.report.additivity_gap
        if res.report.additivity_gap > 1e-8:
            raise NumericError(f"report additivity gap {res.report.additivity_gap:.3g}")
    return outputs, summary


def cmd_bench(args):
    from .pipeline.bench import BENCH_COLUMNS, benchmark

    out = _out_path(args.out)
    model = _load_model(args.model)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in ("fourier", "kernel"):
            raise ConfigError(f"unknown method {m!r}")
    if args.reps < 10:
        raise ConfigError("--reps must be at least 10")
    if args.instance or args.instances:
        X = _read_instances(args, model.space.n)
    else:
        _require_seed(args, "to draw benchmark instances")
        rng = np.random.default_rng(args.seed)
        X = np.column_stack([rng.choice(len(p), size=args.n_instances, p=p)
                             for p in model.basis.measure.probs])
    if "kernel" in methods:
        _require_seed(args, "for Kernel SHAP")
    rows = benchmark(model, X, methods, kernel_budget=args.kernel_budget, reps=args.reps,
                     warmup=args.warmup, seed=args.seed or 0)
    body = [[r.method, r.n_instances, r.reps, r.budget, _fmt(r.median_time_s),
             r.peak_mem_estimate, r.rss_delta, _fmt(r.speedup)] for r in rows]
    return {out: _csv_text(BENCH_COLUMNS, body)}, {
        "median_time_s": {r.method: r.median_time_s for r in rows}}


# --- parser ------------------------------------------------------------------------

def _add_instances(p):
    p.add_argument("--instance", action="append", help='state vector such as "1,0,2" (repeatable)')
    p.add_argument("--instances", help="CSV file with one state vector per line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourier-shap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON file of option values")
        p.add_argument("--manifest", help="run manifest path (default: <output>.manifest.json)")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    p = command("basis", cmd_basis, "tabulate the per-feature orthonormal basis")
    p.add_argument("--space", required=True, help="JSON with cardinalities and measures")
    p.add_argument("--out", required=True)

    p = command("transform", cmd_transform, "Fourier coefficients of a dense value table")
    p.add_argument("--space", required=True)
    p.add_argument("--values", required=True, help=".npy or whitespace/comma separated text")
    p.add_argument("--select", help='keep only selected atoms, e.g. "order<=2 & abs>=1e-3"')
    p.add_argument("--out", required=True, help="sparse model JSONL")

    p = command("shap", cmd_shap, "SHAP values of a sparse model")
    p.add_argument("--model", required=True)
    _add_instances(p)
    p.add_argument("--method", choices=("fourier", "brute", "kernel"), default="fourier")
    p.add_argument("--budget", type=int, help="Kernel SHAP coalition budget")
    p.add_argument("--seed", type=int)
    p.add_argument("--select", help="explain the truncated model and report the truncation bound")
    p.add_argument("--efficiency-tol", type=float, default=1e-8)
    p.add_argument("--out", required=True)

    p = command("bounds", cmd_bounds, "GP truncation bounds on SHAP values")
    p.add_argument("--kernel", required=True, help="kernel description JSON")
    p.add_argument("--S", required=True, help="retained set selector")
    p.add_argument("--delta", type=float, action="append")
    _add_instances(p)
    p.add_argument("--feature", type=int, action="append")
    p.add_argument("--mc-samples", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = command("gp", cmd_gp, "Monte-Carlo check of the expected residual energy")
    p.add_argument("--kernel", required=True)
    p.add_argument("--S", required=True)
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = command("pipeline", cmd_pipeline, "bin a CSV, fit a sparse surrogate, report per bin")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", help="binning schema JSON (default: built-in stroke scheme)")
    p.add_argument("--mlp", help="network weights JSON")
    p.add_argument("--prob-column", help="column of predicted probabilities")
    p.add_argument("--split", default="age")
    p.add_argument("--k1", type=int, default=300)
    p.add_argument("--k2", type=int, default=4000)
    p.add_argument("--k3", type=int, default=2000)
    p.add_argument("--d-max", type=int, default=3)
    p.add_argument("--per-feature-top", type=int, default=5)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--kernel-budget", type=int, default=512)
    p.add_argument("--max-rows-per-bin", type=int)
    p.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", required=True)

    p = command("bench", cmd_bench, "time Fourier and Kernel SHAP")
    p.add_argument("--model", required=True)
    _add_instances(p)
    p.add_argument("--n-instances", type=int, default=10)
    p.add_argument("--methods", default="fourier,kernel")
    p.add_argument("--kernel-budget", type=int, default=512)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--warmup", type=int, default=3)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_config(parser, argv):
    """Parse ``argv``; values from ``--config`` fill options not given on the command line."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        cfg = _read_json(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    sub = _subparser(parser, args.command)
    dests = {a.dest for a in sub._actions} - _RESERVED - {"help"}
    cleaned = {}
    for key, val in cfg.items():
        dest = key.replace("-", "_")
        if dest not in dests:
            raise ConfigError(f"unknown config key {key!r} for '{args.command}'")
        cleaned[dest] = val
    sub.set_defaults(**cleaned)
    try:
        return parser.parse_args(argv)
    finally:
        sub.set_defaults(**{k: None for k in cleaned})


def _manifest_path(args, outputs) -> Path:
    if args.manifest:
        return Path(args.manifest)
    if getattr(args, "out_dir", None):
        return Path(args.out_dir) / "manifest.json"
    return Path(str(next(iter(outputs))) + ".manifest.json")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return EXIT_CONFIG if exc.code else EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "manifest")}
    started = time.perf_counter()
    try:
        outputs, summary = args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FourierShapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    wall = time.perf_counter() - started

    for path, text in outputs.items():
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    manifest = {
        "command": args.command,
        "config": config,
        "config_hash": hashlib.sha256(_canonical(config).encode()).hexdigest(),
        "version": __version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "wall_time_s": wall,
        "outputs": [str(p) for p in outputs],
        "summary": summary,
    }
    with open(_manifest_path(args, outputs), "w") as fh:
        json.dump(manifest, fh, indent=1, default=str)
        fh.write("\n")
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
