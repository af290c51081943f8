"""Synthetic raw rows shaped like the public stroke-prediction table."""
from __future__ import annotations

import csv

import numpy as np

from .mlp import sigmoid

COLUMNS = ("id", "gender", "age", "hypertension", "heart_disease", "ever_married", "work_type",
           "Residence_type", "avg_glucose_level", "bmi", "smoking_status", "stroke")


def synthetic_stroke_rows(n: int, seed: int, reject_fraction: float = 0.02) -> list[dict]:
    """Raw string rows with a plausible risk structure and a few unusable entries.

    The latent risk rises with age, hypertension, heart disease and glucose;
    ``stroke`` is a Bernoulli draw from it and ``prob`` holds the risk itself.
    About ``reject_fraction`` of the rows carry an unusable value (missing
    BMI, the gender "Other", or an age below 2).
    """
    rng = np.random.default_rng(seed)
    age = np.round(rng.uniform(0.5, 82.0, n), 1)
    hyper = (rng.random(n) < 0.05 + 0.25 * (age / 82)).astype(int)
    heart = (rng.random(n) < 0.02 + 0.12 * (age / 82)).astype(int)
    glucose = np.round(np.clip(rng.lognormal(np.log(95), 0.3, n), 55.0, 271.9), 2)
    bmi = np.round(np.clip(rng.normal(28.5, 7.0, n), 11.0, 97.5), 1)
    married = np.where(age > 20 + 15 * rng.random(n), "Yes", "No")
    work = np.where(age < 16, "children",
                    rng.choice(["Govt_job", "Never_worked", "Private", "Self-employed"], n,
                               p=[0.15, 0.02, 0.6, 0.23]))
    smoke = rng.choice(["never smoked", "Unknown", "formerly smoked", "smokes"], n,
                       p=[0.37, 0.3, 0.17, 0.16])
    gender = rng.choice(["Male", "Female"], n, p=[0.41, 0.59])
    residence = rng.choice(["Rural", "Urban"], n)
    z = (-6.5 + 0.06 * age + 0.6 * hyper + 0.6 * heart + 0.006 * (glucose - 95)
         + 0.2 * (smoke == "smokes"))
    prob = sigmoid(z)
    stroke = (rng.random(n) < prob).astype(int)
    rows = []
    for r in range(n):
        rows.append({
            "id": str(r), "gender": gender[r], "age": f"{age[r]:g}",
            "hypertension": str(hyper[r]), "heart_disease": str(heart[r]),
            "ever_married": married[r], "work_type": work[r], "Residence_type": residence[r],
            "avg_glucose_level": f"{glucose[r]:g}", "bmi": f"{bmi[r]:g}",
            "smoking_status": smoke[r], "stroke": str(stroke[r]), "prob": f"{prob[r]:.10g}",
        })
    bad = rng.choice(n, size=int(round(reject_fraction * n)), replace=False)
    for j, r in enumerate(bad):
        if j % 2 == 0:
            rows[r]["bmi"] = "N/A"
        else:
            rows[r]["gender"] = "Other"
    return rows


def write_rows(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
