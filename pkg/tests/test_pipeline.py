import csv
import logging
import math
from pathlib import Path

import numpy as np
import pytest

from fourier_shap import (DataError, FitError, NumericError, SchemaError, SparseFourierModel,
                          forward_transform)
from fourier_shap.pipeline import (REPORT_COLUMNS, BinningScheme, CategoryRule,
                                   IntervalRule, Layer, MLPWeights, benchmark, bin_rows,
                                   empirical_measure, encode, fit_coefficients, logit,
                                   mlp_logit, per_bin_report, read_csv, run_pipeline,
                                   select_atoms, sigmoid, stroke_scheme, synthetic_stroke_rows,
                                   write_report_csv)
from fourier_shap.pipeline.bench import BENCH_COLUMNS, time_per_instance

from conftest import random_basis

FIXTURE = Path(__file__).parent / "fixtures" / "stroke_rows_labeled.csv"


# binning

def _one(scheme, **values):
    base = {"id": "1", "gender": "Male", "age": "50", "hypertension": "0", "heart_disease": "0",
            "ever_married": "Yes", "work_type": "Private", "Residence_type": "Urban",
            "avg_glucose_level": "100", "bmi": "25", "smoking_status": "never smoked"}
    base.update({k: str(v) for k, v in values.items()})
    return bin_rows([base], scheme)


@pytest.mark.parametrize("column,value,label", [
    ("age", 50, "[45,52]"), ("avg_glucose_level", 130, "[126,155)"), ("bmi", 27, "[25,30)"),
])
def test_documented_bins(column, value, label):
    scheme = stroke_scheme()
    data = _one(scheme, **{column: value})
    f = scheme.names.index(column)
    assert scheme.features[f].labels[data.states[0, f]] == label


def test_labeled_rows_fixture():
    rows = read_csv(FIXTURE)
    assert len(rows) == 30
    data = bin_rows(rows, stroke_scheme())
    rejected = {r.row: r for r in data.rejected}
    accepted = dict(zip(data.rows.tolist(), data.states.tolist()))
    for r, row in enumerate(rows):
        want = row["expected"].split()
        if want[0] == "REJECT":
            assert r in rejected and rejected[r].column == want[1], row["id"]
        else:
            assert accepted[r] == [int(v) for v in want], row["id"]


def test_binning_is_idempotent():
    rows = synthetic_stroke_rows(300, seed=1)
    a, b = bin_rows(rows, stroke_scheme()), bin_rows(rows, stroke_scheme())
    np.testing.assert_array_equal(a.states, b.states)
    assert len(a) + len(a.rejected) == 300
    assert np.all(a.states < np.array(a.cardinalities))


def test_missing_column_is_schema_error():
    rows = [{"gender": "Male"}]
    with pytest.raises(SchemaError):
        bin_rows(rows, stroke_scheme())


def test_scheme_from_dict():
    scheme = BinningScheme.from_dict({"features": [
        {"type": "interval", "name": "x", "intervals": [[0, 1], [1, 2]]},
        {"type": "category", "name": "c", "categories": {"a": 0, "b": 1}}]})
    data = bin_rows([{"x": "2", "c": "b"}, {"x": "0.5", "c": "z"}], scheme)
    assert data.states.tolist() == [[1, 1]]
    assert data.rejected[0].reason == "unmappable category"
    with pytest.raises(SchemaError):
        IntervalRule("x", "x", ((0, 1), (2, 3)))
    with pytest.raises(SchemaError):
        CategoryRule("c", "c", {"a": 0, "b": 2})
    with pytest.raises(SchemaError):
        BinningScheme.from_dict({"features": [{"type": "spline", "name": "x"}]})


# logit scale and network

def test_logit_examples(caplog):
    assert logit(0.5) == 0.0
    assert logit(0.9) == pytest.approx(math.log(9), abs=1e-12)
    with caplog.at_level(logging.WARNING):
        assert logit(1.0) == pytest.approx(16.118, abs=1e-3)
    assert "clamp" in caplog.text


def test_logit_sigmoid_round_trip(rng):
    p = rng.uniform(1e-6, 1 - 1e-6, size=1000)
    np.testing.assert_allclose(sigmoid(logit(p)), p, atol=1e-9)


def test_mlp_examples():
    cards = (2, 3)
    d = 5
    zero = MLPWeights([Layer(np.zeros((2, d)), np.zeros(2), "linear")], cards)
    assert mlp_logit(zero, [1, 2]) == 0.0
    lin = MLPWeights([Layer(np.zeros((2, d)), np.array([0.0, 1.75]), "linear")], cards)
    assert mlp_logit(lin, [0, 1]) == 1.75
    np.testing.assert_array_equal(mlp_logit(lin, [[0, 1], [1, 0]]), [1.75, 1.75])


def test_mlp_errors(rng):
    with pytest.raises(SchemaError):
        MLPWeights([Layer(np.zeros((2, 4)), np.zeros(2), "linear")], (2, 3))
    with pytest.raises(SchemaError):
        MLPWeights([Layer(np.zeros((3, 5)), np.zeros(3), "linear")], (2, 3))
    big = MLPWeights([Layer(np.full((2, 5), 1e308), np.zeros(2), "linear"),
                      Layer(np.full((2, 2), 1e308), np.zeros(2), "linear")], (2, 3))
    with pytest.raises(NumericError):
        mlp_logit(big, [1, 1])


def test_mlp_serialization_and_softmax(rng):
    net = MLPWeights.random((2, 3, 4), (8, 4), rng)
    again = MLPWeights.from_dict(net.to_dict())
    X = np.array([[0, 0, 0], [1, 2, 3]])
    np.testing.assert_array_equal(again.logits(X), net.logits(X))
    np.testing.assert_allclose(logit(net.probabilities(X)), net.logits(X), atol=1e-9)
    assert encode(X, (2, 3, 4)).shape == (2, 9)


# selection and fitting

def _exhaustive(cards):
    grids = np.meshgrid(*[np.arange(m) for m in cards], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def test_selection_finds_planted_atom(rng):
    b = random_basis(rng, (3, 2, 4, 2))
    X = rng.integers(0, (3, 2, 4, 2), size=(400, 4))
    for k0 in [(2, 0, 0, 0), (0, 1, 3, 0)]:
        y = b.atom_columns(np.array([k0]), X)[:, 0]
        sel = select_atoms(X, y, b, K1=5, K2=5, K3=5)
        stage = 1 if np.count_nonzero(k0) == 1 else 2
        assert tuple(sel.stage_indices(stage)[0]) == k0


def test_selection_constant_target(rng, caplog):
    b = random_basis(rng, (2, 3))
    X = rng.integers(0, (2, 3), size=(50, 2))
    with caplog.at_level(logging.WARNING):
        sel = select_atoms(X, np.full(50, 1.5), b, K1=10, K2=10, d_max=2)
    assert "constant target" in caplog.text
    assert np.all(sel.scores == 0)
    uni = [tuple(k) for k in sel.stage_indices(1)]
    assert uni == sorted(uni)


def test_selection_budgets_and_determinism(rng):
    cards = (2, 3, 2, 4, 3)
    b = random_basis(rng, cards)
    X = rng.integers(0, cards, size=(600, 5))
    y = rng.normal(size=600)
    a = select_atoms(X, y, b, K1=4, K2=6, K3=5, d_max=3, per_feature_top=2)
    again = select_atoms(X, y, b, K1=4, K2=6, K3=5, d_max=3, per_feature_top=2)
    assert a.to_records() == again.to_records()
    for s, budget in ((1, 4), (2, 6), (3, 5)):
        K = a.stage_indices(s)
        assert len(K) <= budget
        assert np.all(np.count_nonzero(K, axis=1) == s)
    assert np.all(np.diff(a.scores[a.stage == 2]) <= 0)
    low = select_atoms(X, y, b, d_max=1)
    assert set(low.stage.tolist()) == {1}


def test_selection_skips_constant_columns(rng):
    b = random_basis(rng, (2, 3))
    X = np.column_stack([np.zeros(40, dtype=int), rng.integers(0, 3, 40)])
    sel = select_atoms(X, rng.normal(size=40), b, d_max=1)
    assert np.all(sel.selected[:, 0] == 0)


def test_selection_input_errors(rng):
    b = random_basis(rng, (2, 2))
    with pytest.raises(DataError):
        select_atoms(np.zeros((0, 2), dtype=int), np.zeros(0), b)
    with pytest.raises(DataError):
        select_atoms(np.zeros((2, 2), dtype=int), [0.0, np.nan], b)


def test_fit_exact_interpolation(rng):
    b = random_basis(rng, (3, 2, 4))
    X = rng.integers(0, (3, 2, 4), size=(200, 3))
    k0 = np.array([[2, 1, 0]])
    y = 3 * b.atom_columns(k0, X)[:, 0]
    model = fit_coefficients(np.array([[1, 0, 0], [2, 1, 0]]), X, y, b, ridge=0.0)
    assert model[(2, 1, 0)] == pytest.approx(3.0, abs=1e-8)
    assert abs(model[(1, 0, 0)]) < 1e-8
    const = fit_coefficients(np.array([[1, 0, 0]]), X, np.full(200, -0.7), b, ridge=0.0)
    assert const[(0, 0, 0)] == pytest.approx(-0.7, abs=1e-10)
    assert abs(const[(1, 0, 0)]) < 1e-10


def test_fit_matches_exact_transform(rng):
    cards = (2, 3, 2)
    b = random_basis(rng, cards)
    X = _exhaustive(cards)
    h = rng.normal(size=len(X))
    exact = forward_transform(h, b)
    model = fit_coefficients(X, X, h, b, ridge=0.0, sample_weight=b.measure.weights())
    for k in X:
        assert model[tuple(k)] == pytest.approx(exact[tuple(k)], abs=1e-8)


def test_fit_singular_system(rng):
    b = random_basis(rng, (2, 2))
    X = np.array([[0, 0], [0, 0], [1, 1]])
    with pytest.raises(FitError):
        fit_coefficients(np.array([[1, 0], [0, 1]]), X, [0.0, 0.0, 1.0], b, ridge=0.0)


def test_empirical_measure_has_full_support():
    mu = empirical_measure(np.array([[0, 0], [0, 1]]), (2, 3))
    assert all(np.all(mu[i] > 0) for i in range(mu.n))
    np.testing.assert_allclose(mu[0], [2.5 / 3, 0.5 / 3])


# report

def test_report_single_feature_model(rng, tmp_path):
    b = random_basis(rng, (3, 2, 2))
    model = SparseFourierModel(b, [(0, 0, 0), (0, 1, 0)], [0.3, 1.2])
    X = rng.integers(0, (3, 2, 2), size=(60, 3))
    rep = per_bin_report(model, X, X[:, 0], ["a", "b", "c", "none"], ["f0", "f1", "f2"],
                         kernel_budget=8, seed=0, features=[1, 2])
    for label in ("a", "b", "c"):
        t = rep.table(label)
        assert [r["Feature"] for r in t] == ["f1", "f2"]
        assert rep.ranks(label, "F")[0] == 1 and rep.ranks(label, "K")[0] == 1
    empty = rep.table("none")
    assert all(r["empty"] == 1 and r["count"] == 0 for r in empty)
    assert rep.additivity_gap <= 1e-8
    out = tmp_path / "r.csv"
    write_report_csv(rep, out)
    with open(out) as fh:
        assert tuple(next(csv.reader(fh))) == REPORT_COLUMNS


def test_report_input_errors(rng):
    b = random_basis(rng, (2, 2))
    model = SparseFourierModel(b, [(1, 1)], [1.0])
    with pytest.raises(DataError):
        per_bin_report(model, [[0, 1]], [3], ["a"], ["x", "y"], 4, 0)
    with pytest.raises(DataError):
        per_bin_report(model, [[0, 1]], [0, 0], ["a"], ["x", "y"], 4, 0)


def test_run_pipeline_small_scheme():
    rows = synthetic_stroke_rows(400, seed=3)
    full = stroke_scheme()
    keep = ["age", "hypertension", "heart_disease", "avg_glucose_level", "smoking_status"]
    scheme = BinningScheme([f for f in full.features if f.name in keep], full.exclusions)
    res = run_pipeline(rows, scheme, probability_column="prob", split="age", K1=20, K2=40,
                       K3=20, kernel_budget=16, seed=0, max_rows_per_bin=15)
    assert res.report.additivity_gap <= 1e-8
    assert {r["Feature"] for r in res.report.rows} == set(keep) - {"age"}
    assert len(res.report.bins) == 8
    again = run_pipeline(rows, scheme, probability_column="prob", split="age", K1=20, K2=40,
                         K3=20, kernel_budget=16, seed=0, max_rows_per_bin=15)
    assert again.report.rows == res.report.rows
    with pytest.raises(SchemaError):
        run_pipeline(rows, scheme, split="age")


# benchmark

def _time_model(rng, n_entries):
    cards = (2, 2, 3, 2, 3, 2)
    b = random_basis(rng, cards)
    K = rng.integers(0, cards, size=(4 * n_entries, 6))
    K = np.unique(K, axis=0)[:n_entries]
    return SparseFourierModel(b, K, rng.normal(size=len(K)))


def test_fourier_cost_scales_linearly(rng):
    from fourier_shap import fourier_shap
    small = _time_model(rng, 150)
    big = _time_model(rng, 300)
    X = rng.integers(0, (2, 2, 3, 2, 3, 2), size=(20, 6))
    times = [np.median(time_per_instance(lambda x, m=m: fourier_shap(m, x), X, 15, 3))
             for m in (small, big)]
    assert times[1] <= 2.5 * times[0]


def test_kernel_cost_grows_with_budget(rng):
    model = _time_model(rng, 100)
    X = rng.integers(0, (2, 2, 3, 2, 3, 2), size=(3, 6))
    t = [benchmark(model, X, ("kernel",), kernel_budget=B, reps=10, warmup=1)[0].median_time_s
         for B in (32, 128)]
    assert t[1] >= t[0]


def test_benchmark_rows(rng, tmp_path):
    model = _time_model(rng, 50)
    X = rng.integers(0, (2, 2, 3, 2, 3, 2), size=(4, 6))
    rows = benchmark(model, X, ("fourier", "kernel"), kernel_budget=32, reps=10, warmup=3)
    assert [r.method for r in rows] == ["fourier", "kernel"]
    assert rows[1].speedup == pytest.approx(1.0)
    assert all(r.reps == 10 and r.n_instances == 4 and r.peak_mem_estimate >= 0 for r in rows)
    from fourier_shap.pipeline import write_bench_csv
    write_bench_csv(rows, tmp_path / "b.csv")
    with open(tmp_path / "b.csv") as fh:
        assert tuple(next(csv.reader(fh))) == BENCH_COLUMNS
