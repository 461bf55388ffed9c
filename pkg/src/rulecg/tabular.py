"""Tabular ingestion, feature statistics, splitting and binarization.

Raw datasets are kept column-wise: numeric columns as float arrays and
categorical columns as object arrays of strings.  Binarization turns every
feature into a set of threshold or category literals; the resulting
``BinarizedDataset`` is what the rule learners consume.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"

LE = "<="
GT = ">"
EQ = "=="
NE = "!="

_NEGATION = {LE: GT, GT: LE, EQ: NE, NE: EQ}


class DataError(ValueError):
    """Raised for malformed input data (bad CSV, wrong label values, ...)."""


@dataclass(frozen=True)
class TabularDataset:
    """Mixed-type dataset stored column-wise.

    ``columns[j]`` is a float array for numeric features and an object array
    of strings for categorical ones.
    """

    feature_names: tuple[str, ...]
    column_kinds: tuple[str, ...]
    columns: tuple[np.ndarray, ...]
    labels: np.ndarray

    def __post_init__(self):
        d = len(self.feature_names)
        if len(self.column_kinds) != d or len(self.columns) != d:
            raise DataError("feature names, kinds and columns differ in length")
        n = len(self.labels)
        if n < 1:
            raise DataError("dataset has no rows")
        for name, kind, col in zip(self.feature_names, self.column_kinds, self.columns):
            if kind not in (NUMERIC, CATEGORICAL):
                raise DataError(f"unknown column kind {kind!r} for {name!r}")
            if len(col) != n:
                raise DataError(f"column {name!r} has {len(col)} values, expected {n}")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise DataError("labels must be 0 or 1")

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def d(self) -> int:
        return len(self.feature_names)

    def row(self, i: int) -> list:
        return [col[i] for col in self.columns]

    def take(self, idx) -> "TabularDataset":
        idx = np.asarray(idx, dtype=int)
        return TabularDataset(
            self.feature_names,
            self.column_kinds,
            tuple(col[idx] for col in self.columns),
            self.labels[idx],
        )

    def with_labels(self, labels) -> "TabularDataset":
        return TabularDataset(self.feature_names, self.column_kinds, self.columns,
                              np.asarray(labels, dtype=np.int8))

    def require_both_classes(self):
        n_pos = int(self.labels.sum())
        if n_pos == 0 or n_pos == self.n:
            raise DataError("training requires at least one positive and one negative label")


def _parse_float(token: str):
    try:
        v = float(token)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _map_labels(raw_labels, label_column, positive):
    values = sorted(set(raw_labels))
    if len(values) > 2:
        raise DataError(f"label column {label_column!r} has {len(values)} distinct values")
    if positive is None:
        if not set(values) <= {"0", "1"}:
            raise DataError("label values are not 0/1; declare the positive value")
        positive = "1"
    elif positive not in values:
        raise DataError(f"positive label {positive!r} not present in {label_column!r}")
    return np.array([1 if v == positive else 0 for v in raw_labels], dtype=np.int8)


def load_csv(path, label_column: str | None, positive: str | None = None,
             kind_overrides: dict[str, str] | None = None) -> TabularDataset:
    """Read a CSV file with a header row into a :class:`TabularDataset`.

    A column is numeric when every value parses as a finite real, otherwise
    categorical; ``kind_overrides`` forces a kind per column name.  The label
    column must hold exactly two distinct values, ``positive`` names the one
    mapped to 1 (it may be omitted when the values are ``0``/``1``).  With
    ``label_column=None`` every column is a feature and labels are all 0.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        records = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != len(header):
                raise DataError(
                    f"{path}: line {lineno} has {len(rec)} fields, header has {len(header)}")
            rec = [f.strip() for f in rec]
            for name, value in zip(header, rec):
                if value == "":
                    raise DataError(f"{path}: line {lineno}: missing value for {name!r}")
            records.append(rec)
    if not records:
        raise DataError(f"{path}: no data rows")
    if label_column is None:
        li = None
        labels = np.zeros(len(records), dtype=np.int8)
    else:
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not found")
        li = header.index(label_column)
        labels = _map_labels([r[li] for r in records], label_column, positive)

    overrides = dict(kind_overrides or {})
    unknown = set(overrides) - set(header)
    if unknown:
        raise DataError(f"kind overrides name unknown columns: {sorted(unknown)}")
    names, kinds, cols = [], [], []
    for j, name in enumerate(header):
        if j == li:
            continue
        raw = [r[j] for r in records]
        kind = overrides.get(name)
        if kind is None:
            kind = NUMERIC if all(_parse_float(v) is not None for v in raw) else CATEGORICAL
        if kind == NUMERIC:
            parsed = [_parse_float(v) for v in raw]
            if any(v is None for v in parsed):
                raise DataError(f"column {name!r} declared numeric but holds non-numeric values")
            col = np.array(parsed, dtype=float)
        elif kind == CATEGORICAL:
            col = np.array(raw, dtype=object)
        else:
            raise DataError(f"unknown column kind {kind!r}")
        names.append(name)
        kinds.append(kind)
        cols.append(col)
    return TabularDataset(tuple(names), tuple(kinds), tuple(cols), labels)


def write_csv(ds: TabularDataset, path, label_column: str = "y"):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(ds.feature_names) + [label_column])
        for i in range(ds.n):
            w.writerow([_fmt_value(v) for v in ds.row(i)] + [int(ds.labels[i])])


def _fmt_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


@dataclass(frozen=True)
class FeatureStats:
    """Per-feature mean, population standard deviation and domain.

    For categorical features ``mean`` is NaN, ``std`` is the standard
    deviation of the indicator of the most frequent category and ``domain``
    is the sorted category tuple.  Numeric domains are ``(min, max)``.
    """

    mean: np.ndarray
    std: np.ndarray
    domain: tuple
    mode: tuple


def compute_stats(ds: TabularDataset) -> FeatureStats:
    means, stds, domains, modes = [], [], [], []
    for kind, col in zip(ds.column_kinds, ds.columns):
        if kind == NUMERIC:
            mu = float(np.mean(col))
            if np.all(col == col[0]):
                mu, sd = float(col[0]), 0.0
            else:
                sd = float(np.sqrt(np.mean((col - mu) ** 2)))
            means.append(mu)
            stds.append(sd)
            domains.append((float(col.min()), float(col.max())))
            modes.append(None)
        else:
            cats, counts = np.unique(col.astype(str), return_counts=True)
            top = cats[np.argmax(counts)]
            p = counts.max() / len(col)
            means.append(math.nan)
            stds.append(0.0 if p == 1.0 else math.sqrt(p * (1.0 - p)))
            domains.append(tuple(str(c) for c in cats))
            modes.append(str(top))
    return FeatureStats(np.array(means), np.array(stds), tuple(domains), tuple(modes))


@dataclass(frozen=True)
class LiteralDescriptor:
    """One binarized condition on a raw feature."""

    feature: int
    name: str
    op: str
    value: float | str

    def evaluate(self, column: np.ndarray) -> np.ndarray:
        if self.op == LE:
            return column.astype(float) <= self.value
        if self.op == GT:
            return column.astype(float) > self.value
        if self.op == EQ:
            return column.astype(str) == self.value
        if self.op == NE:
            return column.astype(str) != self.value
        raise ValueError(f"unknown literal operator {self.op!r}")

    def holds(self, x) -> bool:
        return bool(self.evaluate(np.array([x], dtype=object))[0])

    def negated(self) -> "LiteralDescriptor":
        return LiteralDescriptor(self.feature, self.name, _NEGATION[self.op], self.value)

    def text(self) -> str:
        v = f"{self.value:.6g}" if isinstance(self.value, float) else str(self.value)
        return f"{self.name} {self.op} {v}"

    def to_json(self) -> dict:
        return {"feature": self.feature, "name": self.name, "op": self.op, "value": self.value}

    @classmethod
    def from_json(cls, obj) -> "LiteralDescriptor":
        value = obj["value"]
        if obj["op"] in (LE, GT):
            value = float(value)
        return cls(int(obj["feature"]), obj["name"], obj["op"], value)


@dataclass(frozen=True)
class BinarizedDataset:
    """Binary literal matrix plus the vocabulary that produced it.

    ``numeric`` holds the raw values of the numeric features listed in
    ``numeric_features``; GLRM linear terms are built from it.
    """

    X: np.ndarray
    descriptors: tuple[LiteralDescriptor, ...]
    labels: np.ndarray
    feature_names: tuple[str, ...]
    column_kinds: tuple[str, ...]
    source_stats: FeatureStats | None = None
    numeric_features: tuple[int, ...] = ()
    numeric: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def Xbar(self) -> np.ndarray:
        return ~self.X

    @property
    def pos_idx(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 1)

    @property
    def neg_idx(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 0)

    def complement_index(self) -> np.ndarray:
        """Index of each literal's complementary literal, or -1 if absent."""
        lookup = {(dsc.feature, dsc.op, dsc.value): j for j, dsc in enumerate(self.descriptors)}
        out = np.full(self.d, -1, dtype=int)
        for j, dsc in enumerate(self.descriptors):
            neg = dsc.negated()
            out[j] = lookup.get((neg.feature, neg.op, neg.value), -1)
        return out

    def with_labels(self, labels) -> "BinarizedDataset":
        return BinarizedDataset(self.X, self.descriptors, np.asarray(labels, dtype=np.int8),
                                self.feature_names, self.column_kinds, self.source_stats,
                                self.numeric_features, self.numeric)

    def take(self, idx) -> "BinarizedDataset":
        idx = np.asarray(idx, dtype=int)
        numeric = self.numeric[idx] if self.numeric.size else self.numeric
        return BinarizedDataset(self.X[idx], self.descriptors, self.labels[idx],
                                self.feature_names, self.column_kinds, self.source_stats,
                                self.numeric_features, numeric)

    def sidecar(self) -> dict:
        """JSON-serializable summary (dimensions and literal vocabulary)."""
        return {
            "n": self.n,
            "d": self.d,
            "feature_names": list(self.feature_names),
            "column_kinds": list(self.column_kinds),
            "descriptors": [dsc.to_json() for dsc in self.descriptors],
        }

    def write_sidecar(self, path):
        Path(path).write_text(json.dumps(self.sidecar(), indent=2) + "\n", encoding="utf-8")


def _numeric_thresholds(col: np.ndarray, num_thresholds: int) -> list[float]:
    uniq = np.unique(col)
    if len(uniq) < 2:
        return []
    mids = (uniq[:-1] + uniq[1:]) / 2.0
    qs = np.arange(1, num_thresholds + 1) / (num_thresholds + 1)
    targets = np.quantile(col, qs)
    chosen = set()
    for t in targets:
        # nearest midpoint; ties go to the lower one
        k = int(np.argmin(np.abs(mids - t)))
        chosen.add(float(mids[k]))
    return sorted(chosen)


def make_descriptors(ds: TabularDataset, num_thresholds: int = 9,
                     include_complements: bool = True) -> list[LiteralDescriptor]:
    if num_thresholds < 1:
        raise ValueError("num_thresholds must be >= 1")
    out = []
    for j, (name, kind, col) in enumerate(zip(ds.feature_names, ds.column_kinds, ds.columns)):
        if kind == NUMERIC:
            for t in _numeric_thresholds(col, num_thresholds):
                out.append(LiteralDescriptor(j, name, LE, t))
                if include_complements:
                    out.append(LiteralDescriptor(j, name, GT, t))
        else:
            for c in sorted(set(col.astype(str))):
                out.append(LiteralDescriptor(j, name, EQ, c))
                if include_complements:
                    out.append(LiteralDescriptor(j, name, NE, c))
    return out


def apply_descriptors(ds: TabularDataset, descriptors: Sequence[LiteralDescriptor],
                      stats: FeatureStats | None = None) -> BinarizedDataset:
    """Evaluate a fixed literal vocabulary on ``ds``."""
    for dsc in descriptors:
        if dsc.feature >= ds.d or ds.feature_names[dsc.feature] != dsc.name:
            raise DataError(f"literal {dsc.text()!r} does not match the dataset's features")
    X = np.zeros((ds.n, len(descriptors)), dtype=bool)
    for j, dsc in enumerate(descriptors):
        X[:, j] = dsc.evaluate(ds.columns[dsc.feature])
    num_idx = tuple(j for j, k in enumerate(ds.column_kinds) if k == NUMERIC)
    numeric = (np.column_stack([ds.columns[j] for j in num_idx]).astype(float)
               if num_idx else np.zeros((ds.n, 0)))
    return BinarizedDataset(X, tuple(descriptors), ds.labels.copy(), ds.feature_names,
                            ds.column_kinds, stats, num_idx, numeric)


def binarize(ds: TabularDataset, stats: FeatureStats | None = None, num_thresholds: int = 9,
             include_complements: bool = True) -> BinarizedDataset:
    """Binarize every feature into threshold / category literals.

    Numeric thresholds sit at the midpoints between adjacent distinct values
    nearest the ``k/(T+1)`` sample quantiles.  Literals that hold on no
    sample or on every sample are dropped.
    """
    if stats is None:
        stats = compute_stats(ds)
    descriptors = make_descriptors(ds, num_thresholds, include_complements)
    full = apply_descriptors(ds, descriptors, stats)
    cover = full.X.sum(axis=0)
    keep = np.flatnonzero((cover > 0) & (cover < ds.n))
    if len(keep) == 0:
        raise DataError("no usable literals after dropping constant columns")
    return BinarizedDataset(full.X[:, keep], tuple(descriptors[j] for j in keep), full.labels,
                            full.feature_names, full.column_kinds, stats,
                            full.numeric_features, full.numeric)


def split(ds: TabularDataset, test_fraction: float, seed: int):
    """Deterministic stratified train/test split."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    counts = np.bincount(ds.labels, minlength=2)
    if ds.n < 2:
        raise DataError("need at least two rows to split")
    test_idx = []
    if counts.min() >= 2:
        for cls in (0, 1):
            members = np.flatnonzero(ds.labels == cls)
            members = members[rng.permutation(len(members))]
            k = int(round(test_fraction * len(members)))
            k = min(max(k, 1), len(members) - 1)
            test_idx.extend(members[:k].tolist())
    else:
        warnings.warn("a class has fewer than two samples; falling back to an unstratified split",
                      stacklevel=2)
        perm = rng.permutation(ds.n)
        k = min(max(int(round(test_fraction * ds.n)), 1), ds.n - 1)
        test_idx = perm[:k].tolist()
    test_mask = np.zeros(ds.n, dtype=bool)
    test_mask[test_idx] = True
    return ds.take(np.flatnonzero(~test_mask)), ds.take(np.flatnonzero(test_mask))
