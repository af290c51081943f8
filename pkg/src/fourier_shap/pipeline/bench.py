"""Wall-time and peak-allocation benchmark of the attribution methods."""
from __future__ import annotations

import csv
import gc
import resource
import sys
import time
import tracemalloc
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ParameterError
from ..shap import fourier_shap, kernel_shap
from ..spectral import SparseFourierModel

BENCH_COLUMNS = ("method", "n_instances", "reps", "budget", "median_time_s",
                 "peak_mem_estimate", "rss_delta", "speedup")


@dataclass
class BenchRow:
    method: str
    n_instances: int
    reps: int
    budget: int
    median_time_s: float
    peak_mem_estimate: int
    rss_delta: int
    speedup: float
    per_instance: np.ndarray


def _max_rss_bytes() -> int:
    rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    return rss if sys.platform == "darwin" else rss * 1024


def _runner(method: str, model: SparseFourierModel, budget: int, seed: int):
    if method == "fourier":
        return lambda x: fourier_shap(model, x)
    if method == "kernel":
        measure = model.basis.measure
        return lambda x: kernel_shap(model, x, measure, budget, seed=seed)
    raise ParameterError(f"unknown method {method!r}")


def time_per_instance(fn, instances, reps: int, warmup: int) -> np.ndarray:
    """Median over ``reps`` timed calls for every instance, after ``warmup`` untimed calls."""
    out = np.empty(len(instances))
    for r, x in enumerate(instances):
        for _ in range(warmup):
            fn(x)
        ts = np.empty(reps)
        for j in range(reps):
            t0 = time.perf_counter()
            fn(x)
            ts[j] = time.perf_counter() - t0
        out[r] = np.median(ts)
    return out


def peak_allocation(fn, instances) -> tuple[int, int]:
    """Traced peak allocation (bytes) over one pass, and the growth of the max resident set."""
    gc.collect()
    rss0 = _max_rss_bytes()
    tracemalloc.start()
    try:
        for x in instances:
            fn(x)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    return int(peak), max(0, _max_rss_bytes() - rss0)


def benchmark(model: SparseFourierModel, instances, methods=("fourier", "kernel"),
              kernel_budget: int = 512, reps: int = 10, warmup: int = 3,
              seed: int = 0) -> list[BenchRow]:
    """Median per-instance wall time and peak transient allocation for each method.

    Garbage collection is paused while timing. ``speedup`` is the Kernel SHAP
    median divided by this method's median when both methods are run.
    """
    X = model.space.check_states(instances)
    if reps < 1 or warmup < 0:
        raise ParameterError("reps must be positive and warmup non-negative")
    rows = []
    for method in methods:
        fn = _runner(method, model, kernel_budget, seed)
        enabled = gc.isenabled()
        gc.disable()
        try:
            per = time_per_instance(fn, X, reps, warmup)
        finally:
            if enabled:
                gc.enable()
        peak, rss = peak_allocation(fn, X)
        rows.append(BenchRow(method, len(X), reps, kernel_budget if method == "kernel" else 0,
                             float(np.median(per)), peak, rss, float("nan"), per))
    kern = [r for r in rows if r.method == "kernel"]
    if kern:
        for r in rows:
            r.speedup = kern[0].median_time_s / r.median_time_s
    return rows


def write_bench_csv(rows: list[BenchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            d = asdict(r)
            d.pop("per_instance")
            d["median_time_s"] = f"{r.median_time_s:.6g}"
            d["speedup"] = f"{r.speedup:.6g}"
            writer.writerow(d)
