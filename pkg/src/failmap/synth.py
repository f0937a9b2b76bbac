"""Synthetic datasets with planted failure regions.

Desk-scale stand-ins for a real model's exported features: inliers follow a
base distribution and are predicted correctly; outliers sit in a shifted
region of feature space and carry systematically wrong predictions (a fixed
label confusion, or a +100 residual for regression).  The clean flag marks
inliers.
"""

from __future__ import annotations

import csv

import numpy as np

from .dataset import Dataset, Meta

INLIER_NOISE = 0.35
CLASS_SEPARATION = 3.0
OUTLIER_SHIFT = 6.0
REGRESSION_RESIDUAL = 100.0


def generate_planted(
    seed: int,
    n_inliers: int = 800,
    n_outliers: int = 200,
    dims: int = 10,
    task: str = "classification",
) -> Dataset:
    """Build a planted-failure dataset.

    Classification: labels cycle over min(10, dims) classes whose feature
    centers sit on scaled basis vectors; outliers are shifted by a constant
    vector and predicted as (label + 1) mod n_labels.  The error measure
    mimics a ground-truth class probability: high for inliers, low for
    outliers.

    Regression: the true value is a fixed linear function of the features;
    inlier predictions err by unit noise while outlier predictions carry a
    +100 residual.  The error measure is the signed residual.
    """
    if n_inliers < 1 or n_outliers < 0 or dims < 1:
        raise ValueError("need n_inliers >= 1, n_outliers >= 0, dims >= 1")
    rng = np.random.default_rng(seed)
    n = n_inliers + n_outliers
    feature_names = [f"f{i}" for i in range(dims)]
    clean = np.concatenate([np.ones(n_inliers), np.zeros(n_outliers)])

    if task == "classification":
        n_labels = min(10, dims)
        # balanced label counts, shuffled so labels do not alias with row order
        inlier_labels = rng.permutation(np.arange(n_inliers) % n_labels)
        outlier_labels = rng.permutation(np.arange(n_outliers) % n_labels)
        labels = np.concatenate([inlier_labels, outlier_labels]).astype(np.float64)
        centers = CLASS_SEPARATION * np.eye(dims)[labels.astype(int) % dims]
        features = centers + INLIER_NOISE * rng.standard_normal((n, dims))
        features[n_inliers:] += OUTLIER_SHIFT

        prediction = labels.copy()
        prediction[n_inliers:] = (labels[n_inliers:] + 1) % n_labels
        error = np.empty(n)
        error[:n_inliers] = 0.85 + 0.14 * rng.random(n_inliers)
        error[n_inliers:] = 0.02 + 0.08 * rng.random(n_outliers)
        meta = Meta(
            ground_truth=labels,
            prediction=prediction,
            error_measure=error,
            aux_flags={"clean": clean},
        )
        return Dataset(features=features, feature_names=feature_names, meta=meta)

    if task != "regression":
        raise ValueError(f"task must be 'classification' or 'regression', got {task!r}")

    features = rng.standard_normal((n, dims))
    features[n_inliers:] += OUTLIER_SHIFT
    slope = np.linspace(1.0, 2.0, dims)
    truth = 50.0 + features @ slope
    prediction = truth + rng.standard_normal(n)
    prediction[n_inliers:] += REGRESSION_RESIDUAL
    meta = Meta(
        ground_truth=truth,
        prediction=prediction,
        error_measure=prediction - truth,
        aux_flags={"clean": clean},
    )
    return Dataset(features=features, feature_names=feature_names, meta=meta)


def write_dataset_csv(d: Dataset, path) -> None:
    """Write a dataset back out in the loader's CSV layout."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        flag_names = sorted(d.meta.aux_flags)
        writer.writerow(
            d.feature_names + ["ground_truth", "prediction", "error_measure"] + flag_names
        )
        for i in range(d.row_count):
            row = [repr(float(v)) for v in d.features[i]]
            row.append(repr(float(d.meta.ground_truth[i])))
            row.append(repr(float(d.meta.prediction[i])))
            row.append(repr(float(d.meta.error_measure[i])))
            row.extend(repr(float(d.meta.aux_flags[f][i])) for f in flag_names)
            writer.writerow(row)


def planted_schema() -> dict:
    """Column-role schema matching `write_dataset_csv` output."""
    return {
        "ground_truth": "ground_truth",
        "prediction": "prediction",
        "error_measure": "error_measure",
        "aux_flags": ["clean"],
    }


def planted_config(task: str, csv_path: str, output_dir: str, seed: int, dims: int = 10) -> dict:
    """Pipeline config validated against the planted fixtures.

    Classification stratifies by error measure and ground truth (so modes are
    label-pure and overrides exact); regression stratifies by the first
    principal component and the signed residual.  The coarse 5-bin cutoff
    histogram avoids spurious gaps in the small per-cell merge samples.
    """
    if task == "classification":
        filters = [
            {"kind": "meta_column", "field": "error_measure"},
            {"kind": "meta_column", "field": "ground_truth"},
        ]
        cover = [
            {"n_intervals": 6, "overlap": 0.3},
            {"n_intervals": min(10, dims), "overlap": 0.3},
        ]
        extraction = {"min_size": 15, "baseline_accuracy": 0.9905}
    else:
        filters = [
            {"kind": "pca_1"},
            {"kind": "meta_column", "field": "error_measure"},
        ]
        cover = [
            {"n_intervals": 6, "overlap": 0.3},
            {"n_intervals": 6, "overlap": 0.3},
        ]
        extraction = {
            "min_size": 15,
            "baseline_accuracy": 0.9905,
            "regression_tolerance": 10.0,
        }
    return {
        "dataset": {"path": csv_path, "schema": planted_schema()},
        "task": task,
        "metric": {"kind": "variance_normalized_euclidean"},
        "filters": filters,
        "cover": cover,
        "clustering": {"bins": 5},
        "extraction": extraction,
        "classifier": {"kind": "linear_svm", "select_c": True},
        "output_dir": output_dir,
        "seed": seed,
    }
