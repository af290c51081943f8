"""CSV ingestion and discretization of raw clinical rows into feature states."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import DataError, SchemaError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RowRejected:
    row: int
    column: str
    value: str
    reason: str


@dataclass(frozen=True)
class IntervalRule:
    """Half-open intervals ``[lo, hi)``; the last one is closed when ``close_last``."""

    name: str
    column: str
    intervals: tuple[tuple[float, float], ...]
    close_last: bool = True
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        ivs = tuple((float(lo), float(hi)) for lo, hi in self.intervals)
        if not ivs:
            raise SchemaError(f"{self.name}: no intervals")
        for lo, hi in ivs:
            if not lo < hi:
                raise SchemaError(f"{self.name}: empty interval [{lo}, {hi})")
        for (_, hi), (lo, _) in zip(ivs, ivs[1:]):
            if lo != hi:
                raise SchemaError(f"{self.name}: intervals must be contiguous ({hi} then {lo})")
        object.__setattr__(self, "intervals", ivs)
        if not self.labels:
            close = [")"] * (len(ivs) - 1) + ["]" if self.close_last else ")"]
            object.__setattr__(self, "labels", tuple(
                f"[{_num(lo)},{_num(hi)}{c}" for (lo, hi), c in zip(ivs, close)))

    @property
    def cardinality(self) -> int:
        return len(self.intervals)

    def lookup(self, raw: str):
        try:
            value = float(raw)
        except (TypeError, ValueError):
            return None, "not a number"
        if not math.isfinite(value):
            return None, "not a number"
        for idx, (lo, hi) in enumerate(self.intervals):
            last = idx == len(self.intervals) - 1
            if lo <= value < hi or (last and self.close_last and value == hi):
                return idx, None
        return None, f"outside [{_num(self.intervals[0][0])}, {_num(self.intervals[-1][1])}]"


@dataclass(frozen=True)
class CategoryRule:
    name: str
    column: str
    categories: Mapping[str, int]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        states = sorted(set(self.categories.values()))
        if states != list(range(len(states))) or len(states) < 2:
            raise SchemaError(f"{self.name}: categories must map onto 0..m-1 with m >= 2")
        if not self.labels:
            labels = [""] * len(states)
            for key, idx in self.categories.items():
                labels[idx] = labels[idx] or key
            object.__setattr__(self, "labels", tuple(labels))

    @property
    def cardinality(self) -> int:
        return len(set(self.categories.values()))

    def lookup(self, raw: str):
        key = raw.strip() if isinstance(raw, str) else raw
        if key in self.categories:
            return self.categories[key], None
        return None, "unmappable category"


@dataclass(frozen=True)
class Exclusion:
    """Drop rows whose numeric ``column`` lies below ``below``."""

    column: str
    below: float
    reason: str = ""


@dataclass
class BinningScheme:
    features: list
    exclusions: list = field(default_factory=list)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(f.cardinality for f in self.features)

    def columns(self) -> set[str]:
        return {f.column for f in self.features} | {e.column for e in self.exclusions}

    @classmethod
    def from_dict(cls, data: Mapping) -> "BinningScheme":
        if "features" not in data:
            raise SchemaError("binning scheme needs a 'features' list")
        feats = []
        for spec in data["features"]:
            kind = spec.get("type")
            name = spec.get("name") or spec.get("column")
            column = spec.get("column", name)
            if kind == "interval":
                feats.append(IntervalRule(name, column, tuple(map(tuple, spec["intervals"])),
                                          bool(spec.get("close_last", True)),
                                          tuple(spec.get("labels", ()))))
            elif kind == "category":
                cats = {str(k): int(v) for k, v in spec["categories"].items()}
                feats.append(CategoryRule(name, column, cats, tuple(spec.get("labels", ()))))
            else:
                raise SchemaError(f"feature {name!r}: unknown type {kind!r}")
        excl = [Exclusion(e["column"], float(e["below"]), e.get("reason", ""))
                for e in data.get("exclude", [])]
        return cls(feats, excl)


def _num(v: float) -> str:
    return f"{v:g}"


AGE_INTERVALS = ((2, 16), (16, 27), (27, 37), (37, 45), (45, 53), (53, 61), (61, 72), (72, 83))
AGE_LABELS = ("[2,15]", "[16,26]", "[27,36]", "[37,44]", "[45,52]", "[53,60]", "[61,71]", "[72,82]")
GLUCOSE_INTERVALS = ((55, 70), (70, 100), (100, 110), (110, 126), (126, 155), (155, 200),
                     (200, 250), (250, 272))
BMI_INTERVALS = ((11, 18.5), (18.5, 25), (25, 30), (30, 35), (35, 40), (40, 50), (50, 60),
                 (60, 97.6))


def stroke_scheme() -> BinningScheme:
    """Discretization of the public stroke-prediction table.

    Ages use integer life-stage ranges ``[2,15], ..., [72,82]``, realized as
    half-open intervals ``[2,16), ..., [72,83)`` so fractional ages such as
    15.5 stay with ``[2,15]``.
    """
    yes_no = {"No": 0, "Yes": 1}
    flag = {"0": 0, "1": 1}
    return BinningScheme(
        features=[
            CategoryRule("gender", "gender", {"Male": 0, "Female": 1}),
            IntervalRule("age", "age", AGE_INTERVALS, close_last=False, labels=AGE_LABELS),
            CategoryRule("hypertension", "hypertension", flag),
            CategoryRule("heart_disease", "heart_disease", flag),
            CategoryRule("ever_married", "ever_married", yes_no),
            CategoryRule("work_type", "work_type", {
                "children": 0, "Govt_job": 1, "Never_worked": 2, "Private": 3, "Self-employed": 4}),
            CategoryRule("residence_type", "Residence_type", {"Rural": 0, "Urban": 1}),
            IntervalRule("avg_glucose_level", "avg_glucose_level", GLUCOSE_INTERVALS),
            IntervalRule("bmi", "bmi", BMI_INTERVALS),
            CategoryRule("smoking_status", "smoking_status", {
                "never smoked": 0, "Unknown": 1, "formerly smoked": 2, "smokes": 3},
                labels=("Never", "Unknown", "Former", "Current")),
        ],
        exclusions=[Exclusion("age", 2.0, "age below 2 years")],
    )


@dataclass
class BinnedDataset:
    names: list[str]
    cardinalities: tuple[int, ...]
    states: np.ndarray
    rows: np.ndarray
    rejected: list[RowRejected]
    extra: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.states)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    def select(self, names: Sequence[str]) -> "BinnedDataset":
        idx = [self.names.index(nm) for nm in names]
        return BinnedDataset(list(names), tuple(self.cardinalities[i] for i in idx),
                             self.states[:, idx], self.rows, self.rejected, self.extra)


def bin_rows(rows: Iterable[Mapping[str, str]], scheme: BinningScheme,
             keep_columns: Sequence[str] = ()) -> BinnedDataset:
    """Map raw rows to state vectors; rows that cannot be mapped are recorded, not raised.

    ``keep_columns`` are copied verbatim (as strings) for accepted rows into
    ``extra``, e.g. a probability or label column.
    """
    rows = list(rows)
    needed = scheme.columns() | set(keep_columns)
    if rows:
        missing = sorted(needed - set(rows[0].keys()))
        if missing:
            raise SchemaError(f"missing column(s): {', '.join(missing)}")
    states, kept, rejected = [], [], []
    extra = {c: [] for c in keep_columns}
    for r, row in enumerate(rows):
        reject = None
        for ex in scheme.exclusions:
            try:
                if float(row[ex.column]) < ex.below:
                    reject = RowRejected(r, ex.column, row[ex.column], ex.reason or f"below {ex.below:g}")
            except (TypeError, ValueError):
                reject = RowRejected(r, ex.column, str(row[ex.column]), "not a number")
            if reject:
                break
        state = []
        if reject is None:
            for rule in scheme.features:
                idx, why = rule.lookup(row[rule.column])
                if idx is None:
                    reject = RowRejected(r, rule.column, str(row[rule.column]), why)
                    break
                state.append(idx)
        if reject is not None:
            rejected.append(reject)
            continue
        states.append(state)
        kept.append(r)
        for c in keep_columns:
            extra[c].append(row[c])
    if rejected:
        logger.info("rejected %d of %d rows", len(rejected), len(rows))
    n = len(scheme.features)
    return BinnedDataset(scheme.names, scheme.cardinalities,
                         np.array(states, dtype=np.int64).reshape(-1, n),
                         np.array(kept, dtype=np.int64), rejected, extra)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty CSV")
        return list(reader)


def load_scheme(path) -> tuple[BinningScheme, dict]:
    """Read a schema file; returns the binning scheme and the raw schema mapping."""
    with open(path) as fh:
        data = json.load(fh)
    if data.get("scheme") == "stroke":
        return stroke_scheme(), data
    return BinningScheme.from_dict(data), data
