"""Real-valued filter functions over a dataset.

Filters stratify the instance space before the cover is built: the first
principal component, any metadata column (prediction error, ground-truth
label), any raw feature column, or externally supplied values.  A model
intended for failure-mode extraction should include the error measure among
its filters; `check_error_filter` warns when it is absent.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import ConfigError, DegenerateDataError, ValidationError

POWER_ITERATION_TOL = 1e-10
POWER_ITERATION_MAX_STEPS = 10_000


@dataclass(frozen=True)
class FilterSpec:
    """Declaration of one filter function.

    kind is one of 'pca_1', 'meta_column', 'feature_column', 'external'.
    meta_column uses `field`, feature_column uses `index`, external uses
    `values` (or a single-column CSV `path` aligned by row id).
    """

    kind: str
    name: str = ""
    field: str | None = None
    index: int | None = None
    values: tuple[float, ...] | None = None
    path: str | None = None

    KINDS = ("pca_1", "meta_column", "feature_column", "external")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"filter kind must be one of {self.KINDS}, got {self.kind!r}")
        if self.kind == "meta_column" and not self.field:
            raise ConfigError("meta_column filter requires a field name")
        if self.kind == "feature_column" and self.index is None:
            raise ConfigError("feature_column filter requires a column index")
        if self.kind == "external" and self.values is None and self.path is None:
            raise ConfigError("external filter requires values or a CSV path")
        if not self.name:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self):
        if self.kind == "meta_column":
            return f"meta:{self.field}"
        if self.kind == "feature_column":
            return f"feature:{self.index}"
        return self.kind


@dataclass(frozen=True)
class FilterValues:
    """Computed filter values plus their observed range."""

    name: str
    values: np.ndarray
    range: tuple[float, float] = field(init=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if not np.isfinite(vals).all():
            raise ValidationError(f"filter {self.name!r} produced non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "range", (float(vals.min()), float(vals.max())))


class ErrorFilterWarning(UserWarning):
    """No filter references the prediction-error measure."""


def principal_component_1(d: Dataset) -> FilterValues:
    """Projection of mean-centered rows onto the top covariance eigenvector.

    Computed by power iteration on the covariance matrix; the start vector is
    the normalized vector of covariance column sums (first basis vector if
    that is zero).  Sign convention: the eigenvector's largest-magnitude
    coordinate is positive, ties resolved toward the lowest index, so repeated
    runs produce identical output.
    """
    if d.row_count < 2:
        raise DegenerateDataError("need at least 2 rows for a principal component")
    centered = d.features - d.features.mean(axis=0)
    if not centered.any():
        raise DegenerateDataError("all rows identical; principal component undefined")
    cov = (centered.T @ centered) / d.row_count

    def basis(k):
        e = np.zeros(d.col_count)
        e[k] = 1.0
        return e

    v = cov.sum(axis=0)
    norm = np.linalg.norm(v)
    v = basis(0) if norm < 1e-300 else v / norm

    next_basis = 0
    for _ in range(POWER_ITERATION_MAX_STEPS):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            # v fell in the nullspace; restart from the next basis vector
            v = basis(next_basis % d.col_count)
            next_basis += 1
            continue
        w /= norm
        if np.linalg.norm(w - v) < POWER_ITERATION_TOL:
            v = w
            break
        v = w

    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0:
        v = -v
    return FilterValues(name="pca_1", values=centered @ v)


def meta_filter(d: Dataset, field_name: str) -> FilterValues:
    """Copy a metadata column verbatim as a filter."""
    return FilterValues(name=f"meta:{field_name}", values=d.meta.column(field_name).copy())


def feature_filter(d: Dataset, index: int) -> FilterValues:
    if not 0 <= index < d.col_count:
        raise ConfigError(f"feature column index {index} out of range 0..{d.col_count - 1}")
    return FilterValues(name=f"feature:{index}", values=d.features[:, index].copy())


def external_filter(d: Dataset, spec: FilterSpec) -> FilterValues:
    if spec.values is not None:
        values = np.asarray(spec.values, dtype=np.float64)
    else:
        with open(spec.path, newline="") as fh:
            cells = [row[0] for row in csv.reader(fh) if row]
        # tolerate a non-numeric header line
        try:
            float(cells[0])
        except (ValueError, IndexError):
            cells = cells[1:]
        values = np.asarray([float(c) for c in cells])
    if len(values) != d.row_count:
        raise ConfigError(
            f"external filter {spec.name!r} has {len(values)} values for {d.row_count} rows"
        )
    return FilterValues(name=spec.name, values=values)


def compute_filter(d: Dataset, spec: FilterSpec) -> FilterValues:
    """Evaluate one FilterSpec against the dataset."""
    if spec.kind == "pca_1":
        return principal_component_1(d)
    if spec.kind == "meta_column":
        return meta_filter(d, spec.field)
    if spec.kind == "feature_column":
        return feature_filter(d, spec.index)
    return external_filter(d, spec)


def compute_filters(d: Dataset, specs: list[FilterSpec]) -> list[FilterValues]:
    return [compute_filter(d, s) for s in specs]


def check_error_filter(specs: list[FilterSpec]) -> list[str]:
    """Warn (never fail) unless some filter references the error measure.

    Stratifying by prediction error is what makes extracted groups homogenous
    in failure behavior; a model built without it still runs, but its groups
    carry no failure-mode guarantee.  Returns the warning messages emitted.
    """
    messages = []
    has_error = any(s.kind == "meta_column" and s.field == "error_measure" for s in specs)
    if not has_error:
        messages.append(
            "no prediction-error filter: include a meta_column filter on "
            "'error_measure' to make extracted groups failure-homogenous"
        )
    for msg in messages:
        warnings.warn(msg, ErrorFilterWarning, stacklevel=2)
    return messages
