"""Feature/label ingestion, synthetic bimodal data and train/test splitting."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    centered: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DataError(f"feature matrix must be 2-D and non-empty, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("feature matrix contains non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LabelMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DataError(f"label matrix must be 2-D, got shape {v.shape}")
        if v.shape[1] < 2:
            raise DataError("label matrix needs at least 2 categories")
        if not np.all((v == 0) | (v == 1)):
            raise DataError("label entries must be 0 or 1")
        empty = np.flatnonzero(v.sum(axis=1) == 0)
        if empty.size:
            raise DataError(f"label row {empty[0] + 1} has no category")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def c(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Dataset:
    modality1: FeatureMatrix
    modality2: FeatureMatrix
    labels: LabelMatrix

    def __post_init__(self):
        sizes = {self.modality1.n, self.modality2.n, self.labels.n}
        if len(sizes) != 1:
            raise DataError(
                f"unpaired dataset: modality1 n={self.modality1.n}, "
                f"modality2 n={self.modality2.n}, labels n={self.labels.n}"
            )

    @property
    def n(self) -> int:
        return self.labels.n

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(
            FeatureMatrix(self.modality1.values[idx]),
            FeatureMatrix(self.modality2.values[idx]),
            LabelMatrix(self.labels.values[idx]),
        )


def _read_rows(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    rows = []
    width = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise DataError(f"inconsistent column count at row {lineno}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise DataError(f"non-numeric field at row {lineno}") from None
    return rows


def load_features(path, expected_dim: int | None = None) -> FeatureMatrix:
    """Parse a header-less comma-separated feature file (one sample per line)."""
    rows = _read_rows(path)
    if not rows:
        raise DataError("empty feature file")
    x = np.array(rows, dtype=np.float64)
    if expected_dim is not None and x.shape[1] != expected_dim:
        raise DataError(f"dimension mismatch at row 1: expected {expected_dim} columns, got {x.shape[1]}")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x).all(axis=1))[0]) + 1
        raise DataError(f"non-finite field at row {bad}")
    return FeatureMatrix(x)


def load_labels(path) -> LabelMatrix:
    rows = _read_rows(path)
    if not rows:
        raise DataError("empty label file")
    y = np.array(rows, dtype=np.float64)
    bad = np.flatnonzero(~np.all((y == 0) | (y == 1), axis=1))
    if bad.size:
        raise DataError(f"label entry outside {{0,1}} at row {bad[0] + 1}")
    return LabelMatrix(y)


def format_row(row) -> str:
    return ",".join(repr(float(v)) for v in row)


def save_matrix(path, values, integer: bool = False):
    values = np.asarray(values)
    with open(path, "w") as fh:
        for row in values:
            if integer:
                fh.write(",".join(str(int(v)) for v in row) + "\n")
            else:
                fh.write(format_row(row) + "\n")


def zero_center(x: FeatureMatrix) -> FeatureMatrix:
    """Subtract column means; idempotent up to rounding."""
    v = x.values - x.values.mean(axis=0)
    return FeatureMatrix(v, centered=True)


def generate_synthetic(n_per_class: int, c: int, d1: int, d2: int,
                       noise_sigma: float = 0.1, seed: int = 0) -> Dataset:
    """Shared-latent bimodal data.

    Every class gets a center in a c-dimensional latent space; each modality
    sees the center through its own random linear map, plus isotropic noise.
    The maps are scaled so noiseless feature vectors have unit expected
    squared norm. Samples are ordered class by class and labels are one-hot.
    """
    if d1 < c or d2 < c:
        raise DataError("modality dimension below class count")
    if n_per_class < 1 or c < 2:
        raise DataError("need n_per_class >= 1 and c >= 2")
    if noise_sigma < 0:
        raise DataError("noise_sigma must be non-negative")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((c, c))
    a1 = rng.standard_normal((c, d1)) / np.sqrt(c * d1)
    a2 = rng.standard_normal((c, d2)) / np.sqrt(c * d2)
    cls = np.repeat(np.arange(c), n_per_class)
    latent = centers[cls]
    x1 = latent @ a1 + noise_sigma * rng.standard_normal((cls.size, d1))
    x2 = latent @ a2 + noise_sigma * rng.standard_normal((cls.size, d2))
    y = np.eye(c)[cls]
    return Dataset(FeatureMatrix(x1), FeatureMatrix(x2), LabelMatrix(y))


def split_indices(labels: LabelMatrix, train_fraction: float, seed: int):
    """Stratified split keyed on each sample's first category."""
    if not 0 < train_fraction < 1:
        raise DataError("train_fraction must lie in (0, 1)")
    y = labels.values
    n = y.shape[0]
    n_train = int(round(train_fraction * n))
    if n_train < 2 or n_train >= n:
        raise DataError(f"degenerate split: {n_train} train / {n - n_train} test of {n}")

    key = np.argmax(y > 0, axis=1)
    rng = np.random.default_rng(seed)
    strata = [np.flatnonzero(key == k) for k in np.unique(key)]
    # largest-remainder allocation of n_train across strata
    quota = np.array([train_fraction * s.size for s in strata])
    take = np.floor(quota).astype(int)
    order = np.argsort(-(quota - take), kind="stable")
    for i in order[: n_train - take.sum()]:
        take[i] += 1

    train = []
    for s, t in zip(strata, take):
        perm = rng.permutation(s)
        train.extend(perm[:t].tolist())
    train = np.sort(np.array(train, dtype=np.intp))
    test = np.setdiff1d(np.arange(n), train)
    if np.unique(y[train], axis=0).shape[0] < 2:
        raise DataError("degenerate split: training set has fewer than 2 distinct label rows")
    return train, test


def split(ds: Dataset, train_fraction: float, seed: int = 0):
    train, test = split_indices(ds.labels, train_fraction, seed)
    return ds.subset(train), ds.subset(test)


def center_with(x: FeatureMatrix, means) -> FeatureMatrix:
    return replace(x, values=x.values - np.asarray(means), centered=True)
