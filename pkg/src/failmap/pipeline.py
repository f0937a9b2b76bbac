"""Orchestration: config parsing, staged runs, artifact persistence, k-fold.

A run executes load -> filters -> graph -> extraction -> training ->
evaluation -> diagnostics from one declarative JSON config and writes every
artifact (graph, modes, ensemble, report) tagged with the config hash, so
downstream consumers can refuse mixed-provenance sets.  Runs are
deterministic: identical config and seed give byte-identical artifacts.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import correction, diagnostics, mapper, modes as modes_mod
from .dataset import (
    Dataset,
    MetricSpec,
    load_dataset,
    select_feature_columns,
    variance_normalized_metric,
)
from .errors import ConfigError, StageError
from .filters import FilterSpec, FilterValues, check_error_filter, compute_filters
from .mapper import CoverSpec

log = logging.getLogger(__name__)

ARTIFACT_FILES = ("graph.json", "modes.json", "ensemble.json", "report.json")


@dataclass(frozen=True)
class PipelineConfig:
    dataset_path: str
    schema: dict
    task: str = "classification"
    metric_kind: str = "variance_normalized_euclidean"
    feature_columns: list[str] | None = None
    filters: list[dict] = field(default_factory=list)
    cover: list[dict] = field(default_factory=list)
    bins: int = mapper.DEFAULT_BINS
    max_cell_size: int = mapper.DEFAULT_MAX_CELL_SIZE
    min_size: int = modes_mod.DEFAULT_MIN_SIZE
    baseline_accuracy: float = modes_mod.DEFAULT_BASELINE_ACCURACY
    regression_tolerance: float = 0.0
    classifier: dict = field(default_factory=dict)
    diagnostics_top_n: int = 5
    output_dir: str = "out"
    seed: int = 0
    workers: int = 1
    clean_flag: str = "clean"

    def __post_init__(self):
        if self.task not in ("classification", "regression"):
            raise ConfigError(f"task must be classification or regression, got {self.task!r}")
        if len(self.filters) != len(self.cover):
            raise ConfigError(
                f"{len(self.filters)} filters but {len(self.cover)} cover specs"
            )

    @staticmethod
    def from_dict(doc: dict) -> "PipelineConfig":
        ds = doc.get("dataset", {})
        clustering = doc.get("clustering", {})
        extraction = doc.get("extraction", {})
        diag = doc.get("diagnostics", {})
        return PipelineConfig(
            dataset_path=ds.get("path", ""),
            schema=ds.get("schema", {}),
            feature_columns=ds.get("feature_columns"),
            task=doc.get("task", "classification"),
            metric_kind=doc.get("metric", {}).get("kind", "variance_normalized_euclidean"),
            filters=list(doc.get("filters", [])),
            cover=list(doc.get("cover", [])),
            bins=clustering.get("bins", mapper.DEFAULT_BINS),
            max_cell_size=clustering.get("max_cell_size", mapper.DEFAULT_MAX_CELL_SIZE),
            min_size=extraction.get("min_size", modes_mod.DEFAULT_MIN_SIZE),
            baseline_accuracy=extraction.get(
                "baseline_accuracy", modes_mod.DEFAULT_BASELINE_ACCURACY
            ),
            regression_tolerance=extraction.get("regression_tolerance", 0.0),
            classifier=dict(doc.get("classifier", {})),
            diagnostics_top_n=diag.get("top_n", 5),
            output_dir=doc.get("output_dir", "out"),
            seed=doc.get("seed", 0),
            workers=doc.get("workers", 1),
            clean_flag=doc.get("clean_flag", "clean"),
        )

    def to_dict(self) -> dict:
        return {
            "dataset": {
                "path": self.dataset_path,
                "schema": self.schema,
                "feature_columns": self.feature_columns,
            },
            "task": self.task,
            "metric": {"kind": self.metric_kind},
            "filters": self.filters,
            "cover": self.cover,
            "clustering": {"bins": self.bins, "max_cell_size": self.max_cell_size},
            "extraction": {
                "min_size": self.min_size,
                "baseline_accuracy": self.baseline_accuracy,
                "regression_tolerance": self.regression_tolerance,
            },
            "classifier": self.classifier,
            "diagnostics": {"top_n": self.diagnostics_top_n},
            "output_dir": self.output_dir,
            "seed": self.seed,
            "workers": self.workers,
            "clean_flag": self.clean_flag,
        }

    def hash(self) -> str:
        return config_hash(self.to_dict())

    def filter_specs(self) -> list[FilterSpec]:
        specs = []
        for f in self.filters:
            specs.append(
                FilterSpec(
                    kind=f["kind"],
                    name=f.get("name", ""),
                    field=f.get("field"),
                    index=f.get("index"),
                    values=tuple(f["values"]) if "values" in f else None,
                    path=f.get("path"),
                )
            )
        return specs

    def cover_specs(self) -> list[CoverSpec]:
        return [CoverSpec(n_intervals=c["n_intervals"], overlap=c["overlap"]) for c in self.cover]

    def classifier_spec(self) -> correction.ClassifierSpec:
        c = self.classifier
        kwargs = {}
        if "kind" in c:
            kwargs["kind"] = c["kind"]
        if "C" in c:
            kwargs["C"] = c["C"]
        if "c_grid" in c:
            kwargs["c_grid"] = tuple(c["c_grid"])
        if "folds" in c:
            kwargs["folds"] = c["folds"]
        if "class_weight" in c:
            kwargs["class_weight"] = c["class_weight"]
        return correction.ClassifierSpec(**kwargs)


def load_config(path) -> PipelineConfig:
    """Parse a config file; relative data paths resolve against its directory."""
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    base = path.parent

    def resolve(p):
        if p and not Path(p).is_absolute() and (base / p).exists():
            return str(base / p)
        return p

    if "dataset" in doc and doc["dataset"].get("path"):
        doc["dataset"]["path"] = resolve(doc["dataset"]["path"])
    for f in doc.get("filters", []):
        if f.get("path"):
            f["path"] = resolve(f["path"])
    if doc.get("output_dir") and not Path(doc["output_dir"]).is_absolute():
        doc["output_dir"] = str(base / doc["output_dir"])
    return PipelineConfig.from_dict(doc)


def config_hash(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


@dataclass
class RunReport:
    config_hash: str
    graph_summary: dict
    mode_table: list[dict]
    ensemble_metrics: dict
    bias_profiles: list[dict]
    diagnostics: dict
    warnings: list[str]
    timings: dict  # stage -> seconds; console-only, kept out of artifacts

    def to_dict(self) -> dict:
        return {
            "schema": "run-report/1",
            "config_hash": self.config_hash,
            "graph_summary": self.graph_summary,
            "mode_table": self.mode_table,
            "ensemble_metrics": self.ensemble_metrics,
            "bias_profiles": self.bias_profiles,
            "diagnostics": self.diagnostics,
            "warnings": self.warnings,
        }


def build_metric(config: PipelineConfig, d: Dataset) -> MetricSpec:
    if config.metric_kind == "euclidean":
        return MetricSpec(kind="euclidean")
    return variance_normalized_metric(d)


def load_stage(config: PipelineConfig) -> Dataset:
    d = load_dataset(config.dataset_path, config.schema)
    if config.feature_columns:
        d = select_feature_columns(d, config.feature_columns)
    return d


def graph_stage(config: PipelineConfig, d: Dataset) -> mapper.MapperGraph:
    return mapper.build_mapper(
        d,
        build_metric(config, d),
        config.filter_specs(),
        config.cover_specs(),
        bins=config.bins,
        max_cell_size=config.max_cell_size,
        workers=config.workers,
    )


def extract_stage(config: PipelineConfig, d: Dataset, graph) -> list[modes_mod.FailureMode]:
    supervision = FilterValues(name="error_measure", values=d.meta.error_measure)
    weighted = modes_mod.weight_edges(graph, supervision)
    partition = modes_mod.louvain(weighted)
    return modes_mod.select_failure_modes(
        partition,
        graph,
        d.meta,
        min_size=config.min_size,
        baseline_accuracy=config.baseline_accuracy,
        task=config.task,
        tolerance=config.regression_tolerance,
    )


def train_stage(config: PipelineConfig, d: Dataset, mode_list) -> correction.CorrectionEnsemble:
    spec = config.classifier_spec()
    if config.classifier.get("select_c") and mode_list and spec.kind != "gaussian_nb":
        # calibrate C on the largest mode's one-vs-rest problem
        largest = max(mode_list, key=lambda m: m.size)
        y = np.zeros(d.row_count, dtype=np.int64)
        y[largest.members] = 1
        X = d.features
        standardizer = correction.Standardizer.fit(X)
        chosen = correction.select_C(standardizer.transform(X), y, spec)
        log.info("selected C=%g on mode %d", chosen, largest.id)
        spec = spec.with_C(chosen)
    return correction.train_ensemble(
        mode_list,
        d,
        spec,
        task=config.task,
        regression_tolerance=config.regression_tolerance,
    )


def evaluate_stage(config: PipelineConfig, d: Dataset, ensemble) -> tuple[dict, list]:
    metrics = correction.evaluate_ensemble(ensemble, d, clean_flag=config.clean_flag)
    profiles = correction.evaluate_bias(ensemble, d, clean_flag=config.clean_flag)
    return metrics, profiles


def diagnose_stage(config: PipelineConfig, d: Dataset, mode_list) -> dict:
    reports = {}
    for mode in mode_list:
        report = diagnostics.rank_features(mode, None, d, top_n=config.diagnostics_top_n)
        reports[str(mode.id)] = {
            "reference": report.group_b,
            "top_features": [
                {"column": c, "name": n, "ks": v} for c, n, v in report.ranking
            ],
        }
    return reports


def _bias_profile_dict(p: correction.BiasProfile) -> dict:
    return {
        "mode_id": p.mode_id,
        "captured": p.captured,
        "ground_truth_distribution": (
            {str(k): v for k, v in p.ground_truth_distribution.items()}
            if p.ground_truth_distribution is not None
            else None
        ),
        "residual_mean": p.residual_mean,
        "residual_sd": p.residual_sd,
        "purity": p.purity,
        "clean_fraction": p.clean_fraction,
    }


def write_artifact(path: Path, doc: dict) -> None:
    path.write_text(canonical_json(doc))


def run(config: PipelineConfig, out_dir=None) -> RunReport:
    """Execute the full pipeline and persist artifacts under the output dir."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config.hash()
    status_path = out / "status.json"
    write_artifact(status_path, {"status": "running", "config_hash": chash})

    timings = {}
    run_warnings = []
    current_stage = "load"

    def stage(name):
        nonlocal current_stage
        current_stage = name
        timings[name] = time.monotonic()
        log.info("stage: %s", name)

    def done(name):
        timings[name] = time.monotonic() - timings[name]

    try:
        stage("load")
        d = load_stage(config)
        run_warnings.extend(check_error_filter(config.filter_specs()))
        done("load")

        stage("graph")
        graph = graph_stage(config, d)
        done("graph")

        stage("extract")
        mode_list = extract_stage(config, d, graph)
        done("extract")

        stage("train")
        ensemble = train_stage(config, d, mode_list)
        done("train")

        stage("evaluate")
        metrics, profiles = evaluate_stage(config, d, ensemble)
        done("evaluate")

        stage("diagnose")
        diag = diagnose_stage(config, d, mode_list)
        done("diagnose")
    except Exception as exc:
        write_artifact(
            status_path,
            {"status": "failed", "stage": current_stage, "error": str(exc), "config_hash": chash},
        )
        raise StageError(current_stage, exc) from exc

    graph_doc = mapper.graph_to_dict(graph, config=config.to_dict())
    graph_doc["config_hash"] = chash
    modes_doc = modes_mod.modes_to_dict(mode_list, config_hash=chash)
    ensemble_doc = ensemble_to_dict(ensemble, config_hash=chash)

    report = RunReport(
        config_hash=chash,
        graph_summary={
            "nodes": len(graph.nodes),
            "edges": len(graph.edges),
            "coverage": graph.covered_rows() / max(graph.row_count, 1),
            "row_count": graph.row_count,
        },
        mode_table=[
            {
                "id": m.id,
                "size": m.size,
                "accuracy": m.accuracy,
                "ground_truth_mode": m.ground_truth_mode,
                "provenance": m.provenance,
            }
            for m in mode_list
        ],
        ensemble_metrics=metrics,
        bias_profiles=[_bias_profile_dict(p) for p in profiles],
        diagnostics=diag,
        warnings=run_warnings,
        timings=timings,
    )

    write_artifact(out / "graph.json", graph_doc)
    write_artifact(out / "modes.json", modes_doc)
    write_artifact(out / "ensemble.json", ensemble_doc)
    write_artifact(out / "report.json", report.to_dict())
    write_artifact(status_path, {"status": "complete", "config_hash": chash})
    return report


def ensemble_to_dict(ensemble: correction.CorrectionEnsemble, config_hash: str | None = None) -> dict:
    def model_dict(model):
        if isinstance(model, correction.GaussianNBModel):
            return {
                "kind": "gaussian_nb",
                "means": model.means.tolist(),
                "variances": model.variances.tolist(),
                "log_priors": model.log_priors.tolist(),
            }
        return {
            "kind": model.kind,
            "weights": model.weights.tolist(),
            "intercept": model.intercept,
        }

    doc = {
        "schema": "correction-ensemble/1",
        "task": ensemble.task,
        "classifier_kind": ensemble.classifier_kind,
        "feature_count": ensemble.feature_count,
        "tie_policy": ensemble.tie_policy,
        "regression_tolerance": ensemble.regression_tolerance,
        "standardizer": (
            {
                "mean": ensemble.standardizer.mean.tolist(),
                "sd": ensemble.standardizer.sd.tolist(),
            }
            if ensemble.standardizer is not None
            else None
        ),
        "classifiers": [
            {
                "mode_id": mc.mode_id,
                "model": model_dict(mc.model),
                "action": {"kind": mc.action.kind, "value": mc.action.value},
            }
            for mc in ensemble.classifiers
        ],
    }
    if config_hash is not None:
        doc["config_hash"] = config_hash
    return doc


def ensemble_from_dict(doc: dict) -> correction.CorrectionEnsemble:
    def model_from(md):
        if md["kind"] == "gaussian_nb":
            return correction.GaussianNBModel(
                means=np.asarray(md["means"]),
                variances=np.asarray(md["variances"]),
                log_priors=np.asarray(md["log_priors"]),
            )
        return correction.LinearModel(
            weights=np.asarray(md["weights"]),
            intercept=md["intercept"],
            kind=md["kind"],
        )

    standardizer = None
    if doc.get("standardizer") is not None:
        standardizer = correction.Standardizer(
            mean=np.asarray(doc["standardizer"]["mean"]),
            sd=np.asarray(doc["standardizer"]["sd"]),
        )
    return correction.CorrectionEnsemble(
        classifiers=[
            correction.ModeClassifier(
                mode_id=cd["mode_id"],
                model=model_from(cd["model"]),
                action=correction.CorrectionAction(
                    kind=cd["action"]["kind"], value=cd["action"]["value"]
                ),
            )
            for cd in doc["classifiers"]
        ],
        task=doc["task"],
        classifier_kind=doc["classifier_kind"],
        feature_count=doc["feature_count"],
        standardizer=standardizer,
        regression_tolerance=doc.get("regression_tolerance", 0.0),
        tie_policy=doc.get("tie_policy", "highest_score"),
    )


def kfold_split(d: Dataset, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled k-fold split: disjoint covering test folds, sizes within 1.

    No stratification; the shuffle is the only randomness and is fixed by the
    seed.
    """
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if k > d.row_count:
        raise ConfigError(f"k={k} exceeds row count {d.row_count}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(d.row_count)
    folds = np.array_split(perm, k)
    splits = []
    for f in range(k):
        test = np.sort(folds[f])
        train = np.sort(np.concatenate([folds[g] for g in range(k) if g != f]))
        splits.append((train, test))
    return splits
