"""Instance data: feature matrix, per-instance metadata, and distances.

The loaded dataset is a finite metric space: rows are instances, columns are
numeric features (pixel values, network activations, sensor readings), and a
metadata block carries ground truth, prediction, and a prediction-error
measure per instance.  Row ids are the 0-based file order and stay stable for
the lifetime of the object.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    InsufficientDataError,
    ParseError,
    SchemaError,
    ValidationError,
)

META_ROLES = ("ground_truth", "prediction", "error_measure")


@dataclass(frozen=True)
class Meta:
    """Per-instance metadata columns, all aligned with the feature rows.

    ground_truth and prediction are stored as floats; categorical labels are
    their integer values.  aux_flags holds optional named binary columns such
    as a clean/corrupt marker.
    """

    ground_truth: np.ndarray
    prediction: np.ndarray
    error_measure: np.ndarray
    aux_flags: dict[str, np.ndarray] = field(default_factory=dict)

    def field_names(self) -> list[str]:
        return list(META_ROLES) + sorted(self.aux_flags)

    def column(self, name: str) -> np.ndarray:
        if name in META_ROLES:
            return getattr(self, name)
        if name in self.aux_flags:
            return self.aux_flags[name]
        raise ConfigError(f"unknown meta field {name!r}; have {self.field_names()}")


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix plus metadata.

    features has shape (row_count, col_count) with no missing values; row id
    i refers to features[i] and meta.*[i].
    """

    features: np.ndarray
    feature_names: list[str]
    meta: Meta

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {feats.shape}")
        if not np.isfinite(feats).all():
            bad = np.argwhere(~np.isfinite(feats))[0]
            raise ValidationError(
                f"non-finite feature value at row {bad[0]}, column {bad[1]}"
            )
        if len(self.feature_names) != feats.shape[1]:
            raise ValidationError(
                f"{len(self.feature_names)} feature names for {feats.shape[1]} columns"
            )
        for name in META_ROLES:
            col = self.meta.column(name)
            if col.shape != (feats.shape[0],):
                raise ValidationError(f"meta column {name!r} length != row count")
            if not np.isfinite(col).all():
                raise ValidationError(f"meta column {name!r} has non-finite values")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)

    @property
    def row_count(self) -> int:
        return self.features.shape[0]

    @property
    def col_count(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class MetricSpec:
    """Distance configuration: plain Euclidean or variance-normalized Euclidean.

    For the variance-normalized kind, `variances` holds the precomputed
    per-column population variances of the columns actually used; columns
    with zero variance are excluded from the distance and listed in
    `excluded_columns`.
    """

    kind: str = "euclidean"
    variances: np.ndarray | None = None
    included_columns: np.ndarray | None = None
    excluded_columns: tuple[int, ...] = ()

    KINDS = ("euclidean", "variance_normalized_euclidean")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"metric kind must be one of {self.KINDS}, got {self.kind!r}")
        if self.kind == "variance_normalized_euclidean":
            if self.variances is None:
                raise ConfigError("variance-normalized metric requires precomputed variances")
            if np.any(np.asarray(self.variances) <= 0):
                raise ConfigError("stored variances must all be positive")


def variance_normalized_metric(d: Dataset) -> MetricSpec:
    """Build a VNE MetricSpec for `d`, dropping zero-variance columns."""
    var = column_variances(d)
    included = np.flatnonzero(var > 0.0)
    excluded = tuple(int(c) for c in np.flatnonzero(var == 0.0))
    if included.size == 0:
        raise ConfigError("every feature column has zero variance; no usable metric")
    return MetricSpec(
        kind="variance_normalized_euclidean",
        variances=var[included],
        included_columns=included,
        excluded_columns=excluded,
    )


def load_dataset(path, schema: dict) -> Dataset:
    """Load a CSV with a header row into a Dataset.

    `schema` maps column roles to header names: the keys 'ground_truth',
    'prediction' and 'error_measure' are required; 'aux_flags' may list
    additional binary metadata columns.  Every column not claimed by the
    schema becomes a feature column, in file order.
    """
    missing = [r for r in META_ROLES if r not in schema]
    if missing:
        raise SchemaError(f"schema missing required roles: {missing}")
    extra = set(schema) - set(META_ROLES) - {"aux_flags"}
    if extra:
        raise SchemaError(f"schema has unknown keys: {sorted(extra)}")
    aux_names = list(schema.get("aux_flags", []))

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        rows = list(reader)

    col_index = {name: i for i, name in enumerate(header)}
    claimed = {}
    for role in META_ROLES:
        name = schema[role]
        if name not in col_index:
            raise SchemaError(f"schema column {name!r} (role {role}) not in header")
        claimed[role] = col_index[name]
    for name in aux_names:
        if name not in col_index:
            raise SchemaError(f"aux flag column {name!r} not in header")
    meta_cols = set(claimed.values()) | {col_index[n] for n in aux_names}
    if len(meta_cols) < len(META_ROLES) + len(aux_names):
        raise SchemaError("schema maps two roles to the same column")

    feature_idx = [i for i in range(len(header)) if i not in meta_cols]
    feature_names = [header[i] for i in feature_idx]

    def parse_cell(text, row, col):
        try:
            value = float(text)
        except ValueError:
            raise ParseError(
                f"non-numeric value {text!r} at row {row}, column {header[col]!r}",
                row=row,
                column=header[col],
            ) from None
        if not math.isfinite(value):
            raise ValidationError(
                f"non-finite value {text!r} at row {row}, column {header[col]!r}"
            )
        return value

    n = len(rows)
    features = np.empty((n, len(feature_idx)), dtype=np.float64)
    meta_data = {role: np.empty(n) for role in META_ROLES}
    aux = {name: np.empty(n) for name in aux_names}
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(f"row {r} has {len(row)} cells, expected {len(header)}", row=r)
        for k, c in enumerate(feature_idx):
            features[r, k] = parse_cell(row[c], r, c)
        for role, c in claimed.items():
            meta_data[role][r] = parse_cell(row[c], r, c)
        for name in aux_names:
            aux[name][r] = parse_cell(row[col_index[name]], r, col_index[name])

    meta = Meta(
        ground_truth=meta_data["ground_truth"],
        prediction=meta_data["prediction"],
        error_measure=meta_data["error_measure"],
        aux_flags=aux,
    )
    return Dataset(features=features, feature_names=feature_names, meta=meta)


def select_feature_columns(d: Dataset, names: list[str]) -> Dataset:
    """Restrict the dataset to the named feature columns (metric/filter set)."""
    missing = [n for n in names if n not in d.feature_names]
    if missing:
        raise ConfigError(f"unknown feature columns: {missing}")
    idx = [d.feature_names.index(n) for n in names]
    return Dataset(
        features=d.features[:, idx].copy(),
        feature_names=list(names),
        meta=d.meta,
    )


def column_variances(d: Dataset) -> np.ndarray:
    """Population variance (divide by n) of every feature column."""
    if d.row_count < 2:
        raise InsufficientDataError(
            f"need at least 2 rows to compute variances, have {d.row_count}"
        )
    return d.features.var(axis=0)


def metric_embedding(d: Dataset, m: MetricSpec) -> np.ndarray:
    """Feature matrix rescaled so plain Euclidean distance equals the metric."""
    if m.kind == "euclidean":
        return d.features
    cols = m.included_columns
    if cols is None:
        if len(m.variances) != d.col_count:
            raise ConfigError(
                f"variance vector length {len(m.variances)} != column count {d.col_count}"
            )
        cols = np.arange(d.col_count)
    elif len(m.variances) != len(cols):
        raise ConfigError("variance vector length != included column count")
    return d.features[:, cols] / np.sqrt(np.asarray(m.variances))


def distance(d: Dataset, m: MetricSpec, i: int, j: int) -> float:
    """Distance between rows i and j under the metric spec.

    Variance-normalized Euclidean is sqrt(sum_c (x_ic - x_jc)^2 / var_c) over
    the included columns.
    """
    scaled = metric_embedding(d, m)
    return float(np.linalg.norm(scaled[i] - scaled[j]))


def pairwise_distances(d: Dataset, m: MetricSpec, rows) -> np.ndarray:
    """Square distance matrix for the given row ids.

    Materializes only the submatrix for one cover cell; callers must not pass
    the full dataset unless it is small.
    """
    from scipy.spatial.distance import cdist

    rows = np.asarray(list(rows), dtype=np.intp)
    sub = metric_embedding(d, m)[rows]
    return cdist(sub, sub, metric="euclidean")
