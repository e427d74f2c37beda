"""Labelled feature data, balanced splits, binary views and pair enumeration."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    pass


class EmptyBucketError(DatasetError):
    """A pair bucket (intra or inter) would be empty."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    class_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        lab = np.asarray(self.labels, dtype=int)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError(f"features must be a non-empty n x d matrix, got {X.shape}")
        if lab.shape != (X.shape[0],):
            raise DatasetError(f"labels length {lab.shape} does not match n={X.shape[0]}")
        if self.class_count < 1 or (lab.size and (lab.min() < 0 or lab.max() >= self.class_count)):
            raise DatasetError("labels must lie in [0, class_count)")
        X.flags.writeable = False
        lab.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", lab)
        if not self.class_names:
            object.__setattr__(self, "class_names", tuple(str(c) for c in range(self.class_count)))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.features[idx], self.labels[idx], self.class_count, self.class_names)


@dataclass(frozen=True)
class BinaryView:
    """Rows of two classes with labels mapped to +1 (positive) and -1 (negative)."""

    base: Dataset
    positive_class: int
    negative_class: int
    rows: np.ndarray = field(repr=False)

    @property
    def X(self) -> np.ndarray:
        return self.base.features[self.rows]

    @property
    def y(self) -> np.ndarray:
        return np.where(self.base.labels[self.rows] == self.positive_class, 1.0, -1.0)

    @property
    def n(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class PairSets:
    intra: np.ndarray  # (k, 2) index pairs
    inter: np.ndarray
    mode: str


def binary_view(ds: Dataset, positive_class: int, negative_class: int) -> BinaryView:
    if positive_class == negative_class:
        raise DatasetError("positive and negative class must differ")
    rows = np.flatnonzero((ds.labels == positive_class) | (ds.labels == negative_class))
    return BinaryView(ds, positive_class, negative_class, rows)


def from_binary(X, y) -> BinaryView:
    """Wrap an (X, y in {+1,-1}) pair as a BinaryView over a two-class dataset."""
    y = np.asarray(y)
    labels = np.where(y > 0, 1, 0)
    ds = Dataset(np.asarray(X, dtype=float), labels, 2, ("neg", "pos"))
    return BinaryView(ds, 1, 0, np.arange(len(y)))


def load_csv(path, label_column: str, normalize_rows: bool = False) -> Dataset:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if label_column not in header:
            raise DatasetError(f"{path}: no column named {label_column!r}")
        li = header.index(label_column)
        feat_cols = [c for k, c in enumerate(header) if k != li]
        rows, raw_labels = [], []
        for r, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DatasetError(f"{path}: row {r} has {len(rec)} cells, expected {len(header)}")
            vals = []
            for k, cell in enumerate(rec):
                if k == li:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DatasetError(f"{path}: row {r}, column {header[k]!r}: non-numeric or non-finite cell {cell!r}")
                vals.append(v)
            rows.append(vals)
            raw_labels.append(rec[li].strip())
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    names: dict[str, int] = {}
    for lab in raw_labels:
        names.setdefault(lab, len(names))
    X = np.array(rows, dtype=float).reshape(len(rows), len(feat_cols))
    if normalize_rows:
        X = _normalize(X)
    labels = np.array([names[lab] for lab in raw_labels])
    return Dataset(X, labels, len(names), tuple(names))


def write_csv(ds: Dataset, path, label_column: str = "label") -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{k}" for k in range(ds.d)] + [label_column])
        for x, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [ds.class_names[lab]])
    return path


def _normalize(X):
    nrm = np.linalg.norm(X, axis=1, keepdims=True)
    if np.any(nrm == 0):
        raise DatasetError(f"cannot normalize zero row {int(np.flatnonzero(nrm[:, 0] == 0)[0])}")
    return X / nrm


def normalize_rows(ds: Dataset) -> Dataset:
    return Dataset(_normalize(ds.features), ds.labels, ds.class_count, ds.class_names)


def balanced_subsample(ds: Dataset, per_class: int, seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    picks = []
    for c in range(ds.class_count):
        rows = np.flatnonzero(ds.labels == c)
        if len(rows) < per_class:
            raise DatasetError(f"class {ds.class_names[c]!r} has {len(rows)} rows, fewer than {per_class}")
        picks.append(np.sort(rng.choice(rows, size=per_class, replace=False)))
    return ds.subset(np.concatenate(picks))


def _pair_labels(obj):
    if isinstance(obj, BinaryView):
        return obj.y
    if isinstance(obj, Dataset):
        return obj.labels
    return np.asarray(obj)


def enumerate_pairs(view, mode: str = "train-train", other=None, max_pairs: int = 20_000, seed: int = 0) -> PairSets:
    """Split index pairs into same-label and different-label buckets.

    train-train: unordered pairs i < j within ``view``.
    test-train: pairs (i, j) with i indexing ``view`` (the test set) and j indexing ``other``.
    Buckets larger than ``max_pairs`` are subsampled uniformly with ``seed``.
    """
    a = _pair_labels(view)
    if mode == "train-train":
        if len(a) < 2:
            raise DatasetError("need at least two examples")
        i, j = np.triu_indices(len(a), k=1)
        b = a
    elif mode == "test-train":
        if other is None:
            raise DatasetError("test-train mode needs the training set as `other`")
        b = _pair_labels(other)
        if len(a) < 1 or len(b) < 1:
            raise DatasetError("need at least one test and one training example")
        i, j = (g.ravel() for g in np.meshgrid(np.arange(len(a)), np.arange(len(b)), indexing="ij"))
    else:
        raise DatasetError(f"unknown pair mode {mode!r}")
    same = a[i] == b[j]
    rng = np.random.default_rng(seed)
    buckets = []
    for name, mask in (("intra", same), ("inter", ~same)):
        pairs = np.stack([i[mask], j[mask]], axis=1)
        if len(pairs) == 0:
            raise EmptyBucketError(f"no {name}-class pairs available in {mode} mode")
        if len(pairs) > max_pairs:
            pairs = pairs[np.sort(rng.choice(len(pairs), size=max_pairs, replace=False))]
        buckets.append(pairs)
    return PairSets(buckets[0], buckets[1], mode)
