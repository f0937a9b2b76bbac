"""Feature-level characterization of failure modes.

Ranks features by the two-sample Kolmogorov-Smirnov statistic between a
failure mode's members and a reference group, surfacing which inputs (or
activations) most distinguish the mode from well-behaved data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .modes import FailureMode


@dataclass(frozen=True)
class KSReport:
    """Per-feature separation scores between two member groups."""

    group_a: str
    group_b: str
    statistics: np.ndarray  # D per feature column, in column order
    ranking: list[tuple[int, str, float]]  # (column index, name, D), best first


def ks_statistic(sample_a, sample_b) -> float:
    """Two-sample KS statistic: sup |F_a(x) - F_b(x)| over all sample points.

    Uses the right-continuous empirical CDFs, so the supremum is attained at
    one of the pooled sample values.  The statistic alone, no p-value.
    """
    a = np.sort(np.asarray(sample_a, dtype=np.float64))
    b = np.sort(np.asarray(sample_b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def rank_features(
    mode: FailureMode,
    reference: FailureMode | None,
    d: Dataset,
    top_n: int = 5,
) -> KSReport:
    """KS statistic per feature between a mode and a reference group.

    reference=None compares against the whole dataset.  Features sort by
    descending D with ties broken toward the lower column index; the ranking
    keeps the top_n entries.
    """
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    rows_a = mode.members
    if reference is None:
        rows_b = np.arange(d.row_count)
        group_b = "dataset"
    else:
        rows_b = reference.members
        group_b = f"mode:{reference.id}"
    if rows_a.size == 0 or rows_b.size == 0:
        raise ValueError("both groups must be nonempty")

    stats = np.array(
        [
            ks_statistic(d.features[rows_a, c], d.features[rows_b, c])
            for c in range(d.col_count)
        ]
    )
    order = np.lexsort((np.arange(d.col_count), -stats))
    top = order[: min(top_n, d.col_count)]
    ranking = [(int(c), d.feature_names[c], float(stats[c])) for c in top]
    return KSReport(
        group_a=f"mode:{mode.id}",
        group_b=group_b,
        statistics=stats,
        ranking=ranking,
    )
