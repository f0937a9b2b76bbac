"""failmap: graph models of a predictive model's failure regions.

Builds an overlapping-cover cluster graph of instance space stratified by
prediction error, extracts coherent failure modes by weighted community
detection, trains a one-vs-rest correction layer, and ranks the features
that characterize each mode.
"""

__version__ = "0.1.0"

from .correction import (
    ClassifierSpec,
    CorrectionEnsemble,
    correct,
    evaluate_bias,
    evaluate_ensemble,
    fit_classifier,
    select_C,
    train_ensemble,
)
from .dataset import (
    Dataset,
    Meta,
    MetricSpec,
    column_variances,
    distance,
    load_dataset,
    pairwise_distances,
    variance_normalized_metric,
)
from .diagnostics import KSReport, ks_statistic, rank_features
from .errors import FailmapError
from .filters import (
    FilterSpec,
    FilterValues,
    check_error_filter,
    compute_filters,
    meta_filter,
    principal_component_1,
)
from .mapper import (
    CoverSpec,
    Interval,
    MapperGraph,
    MapperNode,
    build_cover,
    build_mapper,
    histogram_cutoff,
    nerve,
    pullback_cells,
    single_linkage,
)
from .modes import (
    FailureMode,
    WeightedGraph,
    ahcl_partition,
    louvain,
    manual_select,
    modularity,
    select_failure_modes,
    weight_edges,
)
from .pipeline import PipelineConfig, RunReport, kfold_split, load_config, run
from .synth import generate_planted

__all__ = [
    "ClassifierSpec",
    "CorrectionEnsemble",
    "CoverSpec",
    "Dataset",
    "FailmapError",
    "FailureMode",
    "FilterSpec",
    "FilterValues",
    "Interval",
    "KSReport",
    "MapperGraph",
    "MapperNode",
    "Meta",
    "MetricSpec",
    "PipelineConfig",
    "RunReport",
    "WeightedGraph",
    "ahcl_partition",
    "build_cover",
    "build_mapper",
    "check_error_filter",
    "column_variances",
    "compute_filters",
    "correct",
    "distance",
    "evaluate_bias",
    "evaluate_ensemble",
    "fit_classifier",
    "generate_planted",
    "histogram_cutoff",
    "kfold_split",
    "ks_statistic",
    "load_config",
    "load_dataset",
    "louvain",
    "manual_select",
    "meta_filter",
    "modularity",
    "nerve",
    "pairwise_distances",
    "principal_component_1",
    "pullback_cells",
    "rank_features",
    "run",
    "select_C",
    "select_failure_modes",
    "single_linkage",
    "train_ensemble",
    "variance_normalized_metric",
    "weight_edges",
]
