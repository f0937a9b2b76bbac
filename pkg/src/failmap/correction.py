"""Correction layer: one-vs-rest mode classifiers and prediction adjustment.

Each failure mode gets a binary classifier (mode members vs everything else).
At prediction time the firing classifier with the highest decision score
applies its correction: override the upstream label with the mode's ground
truth, or subtract the mode's mean residual for regression tasks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .dataset import Dataset
from .errors import ConfigError, DegenerateDataError, InputError
from .modes import FailureMode

log = logging.getLogger(__name__)

GRADIENT_TOL = 1e-6
MAX_ITERATIONS = 5_000
VARIANCE_FLOOR = 1e-9
SD_FLOOR = 1e-9

CLASSIFIER_KINDS = ("logistic_regression", "linear_svm", "gaussian_nb")


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "linear_svm"
    C: float = 1.0
    c_grid: tuple[float, ...] = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
    folds: int = 5
    class_weight: str = "none"  # 'none' | 'balanced'

    def __post_init__(self):
        if self.kind not in CLASSIFIER_KINDS:
            raise ConfigError(f"classifier kind must be one of {CLASSIFIER_KINDS}")
        if self.C <= 0:
            raise ConfigError(f"C must be positive, got {self.C}")
        if self.class_weight not in ("none", "balanced"):
            raise ConfigError(f"class_weight must be 'none' or 'balanced'")

    def with_C(self, c: float) -> "ClassifierSpec":
        return ClassifierSpec(
            kind=self.kind,
            C=c,
            c_grid=self.c_grid,
            folds=self.folds,
            class_weight=self.class_weight,
        )


@dataclass(frozen=True)
class LinearModel:
    """Linear decision function sign(x . w + b) with the training loss kind."""

    weights: np.ndarray
    intercept: float
    kind: str

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights + self.intercept

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)


@dataclass(frozen=True)
class GaussianNBModel:
    """Two-class Gaussian naive Bayes with data-induced priors."""

    means: np.ndarray  # shape (2, n_features); row 1 = positive class
    variances: np.ndarray
    log_priors: np.ndarray
    kind: str = "gaussian_nb"

    def _log_joint(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.empty((X.shape[0], 2))
        for c in range(2):
            var = self.variances[c]
            out[:, c] = self.log_priors[c] - 0.5 * np.sum(
                np.log(2 * np.pi * var) + (X - self.means[c]) ** 2 / var, axis=1
            )
        return out

    def posterior(self, X: np.ndarray) -> np.ndarray:
        """P(class | x) over {rest, mode}; rows sum to 1."""
        lj = self._log_joint(X)
        lj -= lj.max(axis=1, keepdims=True)
        p = np.exp(lj)
        return p / p.sum(axis=1, keepdims=True)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        """Log posterior odds of the positive class; fires when > 0."""
        lj = self._log_joint(np.atleast_2d(X))
        return lj[:, 1] - lj[:, 0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)


def _sample_weights(y: np.ndarray, class_weight: str) -> np.ndarray:
    if class_weight == "none":
        return np.ones(y.size)
    # balanced: reweight so each class contributes half the total mass
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    w = np.where(y == 1, y.size / (2.0 * n_pos), y.size / (2.0 * n_neg))
    return w


def logistic_loss_grad(w, b, X, t, C, sample_weight=None):
    """Mean log-loss + ridge term, with analytic gradient.

    t holds labels in {-1, +1}.  Loss = mean(log(1 + exp(-t z))) + ||w||^2/(2C)
    with z = X w + b; the intercept is not regularized.
    """
    z = X @ w + b
    margins = -t * z
    sw = np.ones_like(z) if sample_weight is None else sample_weight
    loss = float(np.mean(sw * np.logaddexp(0.0, margins))) + (w @ w) / (2.0 * C)
    # d/dz log(1+exp(-tz)) = -t * sigmoid(-tz)
    coef = sw * (-t) * expit(margins)
    grad_w = (X.T @ coef) / X.shape[0] + w / C
    grad_b = float(coef.mean())
    return loss, grad_w, grad_b


def squared_hinge_loss_grad(w, b, X, t, C, sample_weight=None):
    """Mean squared hinge + ridge term, with analytic gradient.

    Loss = mean(max(0, 1 - t z)^2) + ||w||^2/(2C).
    """
    z = X @ w + b
    margin = np.maximum(0.0, 1.0 - t * z)
    sw = np.ones_like(z) if sample_weight is None else sample_weight
    loss = float(np.mean(sw * margin**2)) + (w @ w) / (2.0 * C)
    coef = sw * (-2.0 * t * margin)
    grad_w = (X.T @ coef) / X.shape[0] + w / C
    grad_b = float(coef.mean())
    return loss, grad_w, grad_b


LOSSES = {
    "logistic_regression": logistic_loss_grad,
    "linear_svm": squared_hinge_loss_grad,
}


def _gradient_descent(loss_grad, X, t, C, sample_weight, trace=None):
    """Full-batch descent with backtracking line search from zero weights.

    The Armijo condition keeps the loss non-increasing at every step; stops
    at gradient norm <= GRADIENT_TOL or the iteration cap.  `trace`, if
    given, collects the loss at every accepted iterate.
    """
    w = np.zeros(X.shape[1])
    b = 0.0
    step = 1.0
    loss, grad_w, grad_b = loss_grad(w, b, X, t, C, sample_weight)
    if trace is not None:
        trace.append(loss)
    for _ in range(MAX_ITERATIONS):
        gnorm_sq = grad_w @ grad_w + grad_b * grad_b
        if np.sqrt(gnorm_sq) <= GRADIENT_TOL:
            break
        accepted = False
        while step >= 1e-18:
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            loss_new, gw_new, gb_new = loss_grad(w_new, b_new, X, t, C, sample_weight)
            if loss_new <= loss - 1e-4 * step * gnorm_sq:
                accepted = True
                break
            step *= 0.5
        if not accepted:  # line search exhausted; no descent possible in float64
            break
        w, b, loss, grad_w, grad_b = w_new, b_new, loss_new, gw_new, gb_new
        if trace is not None:
            trace.append(loss)
        step = min(step * 2.0, 1e8)
    return w, b


def fit_classifier(X, y, spec: ClassifierSpec):
    """Train one binary classifier; y holds 0/1 mode membership."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ConfigError("X must be 2-D with one label per row")
    if not np.isfinite(X).all():
        raise ConfigError("features must be finite")
    n_pos = int(np.sum(y == 1))
    if n_pos == 0 or n_pos == y.size:
        raise DegenerateDataError(
            f"training labels are single-class ({n_pos} of {y.size} positive)"
        )

    if spec.kind == "gaussian_nb":
        means = np.empty((2, X.shape[1]))
        variances = np.empty((2, X.shape[1]))
        priors = np.empty(2)
        for c in range(2):
            rows = X[y == c]
            means[c] = rows.mean(axis=0)
            variances[c] = np.maximum(rows.var(axis=0), VARIANCE_FLOOR)
            priors[c] = rows.shape[0] / X.shape[0]
        return GaussianNBModel(
            means=means, variances=variances, log_priors=np.log(priors)
        )

    t = np.where(y == 1, 1.0, -1.0)
    sw = _sample_weights(y, spec.class_weight)
    if spec.class_weight == "none":
        sw = None
    w, b = _gradient_descent(LOSSES[spec.kind], X, t, spec.C, sw)
    return LinearModel(weights=w, intercept=b, kind=spec.kind)


def stratified_folds(y: np.ndarray, folds: int) -> list[np.ndarray]:
    """Deterministic stratified folds: each class dealt round-robin in row order."""
    if folds < 2:
        raise ConfigError(f"folds must be >= 2, got {folds}")
    assignment = np.empty(y.size, dtype=np.int64)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        assignment[idx] = np.arange(idx.size) % folds
    return [np.flatnonzero(assignment == f) for f in range(folds)]


def select_C(X, y, spec: ClassifierSpec, folds: int | None = None) -> float:
    """Pick the grid C with the best mean cross-validated accuracy.

    Ties resolve toward the smaller C (stronger regularization).
    """
    if spec.kind == "gaussian_nb":
        raise ConfigError("gaussian_nb has no C to select")
    if not spec.c_grid:
        raise ConfigError("empty C grid")
    folds = spec.folds if folds is None else folds
    y = np.asarray(y)
    fold_indices = stratified_folds(y, folds)
    all_rows = np.arange(y.size)

    best_c, best_acc = None, -1.0
    for c in spec.c_grid:
        accs = []
        for test_rows in fold_indices:
            train_rows = np.setdiff1d(all_rows, test_rows)
            model = fit_classifier(X[train_rows], y[train_rows], spec.with_C(c))
            pred = model.predict(X[test_rows])
            accs.append(float(np.mean(pred == y[test_rows])))
        mean_acc = float(np.mean(accs))
        if mean_acc > best_acc or (mean_acc == best_acc and best_c is not None and c < best_c):
            best_c, best_acc = c, mean_acc
    return best_c


@dataclass(frozen=True)
class CorrectionAction:
    kind: str  # 'label_override' | 'offset'
    value: float


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    sd: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.sd

    @staticmethod
    def fit(X: np.ndarray) -> "Standardizer":
        return Standardizer(
            mean=X.mean(axis=0), sd=np.maximum(X.std(axis=0), SD_FLOOR)
        )


@dataclass(frozen=True)
class ModeClassifier:
    mode_id: int
    model: LinearModel | GaussianNBModel
    action: CorrectionAction


@dataclass(frozen=True)
class CorrectionEnsemble:
    """One classifier per failure mode plus its correction action.

    Multi-fire resolution: the firing classifier with the highest decision
    score wins; exact ties go to the lowest mode id.
    """

    classifiers: list[ModeClassifier]
    task: str  # 'classification' | 'regression'
    classifier_kind: str
    feature_count: int
    standardizer: Standardizer | None
    regression_tolerance: float = 0.0
    tie_policy: str = "highest_score"

    def _prepare(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.feature_count:
            raise InputError(
                f"expected {self.feature_count} feature columns, got {X.shape[1]}"
            )
        if self.standardizer is not None:
            X = self.standardizer.transform(X)
        return X

    def scores(self, X) -> np.ndarray:
        """Decision score per (mode, row); a mode fires where score > 0."""
        X = self._prepare(X)
        if not self.classifiers:
            return np.zeros((0, X.shape[0]))
        return np.vstack([mc.model.decision_function(X) for mc in self.classifiers])


def train_ensemble(
    modes: list[FailureMode],
    d: Dataset,
    spec: ClassifierSpec,
    task: str = "classification",
    regression_tolerance: float = 0.0,
) -> CorrectionEnsemble:
    """Fit one member-vs-rest classifier per mode with its correction action.

    Modes whose member sets leave no rest class (or are empty) are skipped
    with a logged warning rather than failing the whole ensemble.
    """
    X = d.features
    standardizer = None
    if spec.kind != "gaussian_nb":
        standardizer = Standardizer.fit(X)
        X = standardizer.transform(X)

    classifiers = []
    for mode in modes:
        y = np.zeros(d.row_count, dtype=np.int64)
        y[mode.members] = 1
        try:
            model = fit_classifier(X, y, spec)
        except DegenerateDataError as exc:
            log.warning("skipping mode %d: %s", mode.id, exc)
            continue
        if task == "regression":
            residuals = d.meta.prediction[mode.members] - d.meta.ground_truth[mode.members]
            action = CorrectionAction(kind="offset", value=float(residuals.mean()))
        else:
            action = CorrectionAction(
                kind="label_override", value=float(mode.ground_truth_mode)
            )
        classifiers.append(ModeClassifier(mode_id=mode.id, model=model, action=action))

    return CorrectionEnsemble(
        classifiers=classifiers,
        task=task,
        classifier_kind=spec.kind,
        feature_count=d.col_count,
        standardizer=standardizer,
        regression_tolerance=regression_tolerance,
    )


@dataclass(frozen=True)
class BiasProfile:
    """What one mode classifier captures on held-out data."""

    mode_id: int
    captured: int
    ground_truth_distribution: dict | None  # label -> count (classification)
    residual_mean: float | None  # regression
    residual_sd: float | None
    purity: float | None
    clean_fraction: float | None


def evaluate_bias(
    ensemble: CorrectionEnsemble, holdout: Dataset, clean_flag: str = "clean"
) -> list[BiasProfile]:
    """Capture statistics per classifier on a labeled holdout set."""
    scores = ensemble.scores(holdout.features)
    meta = holdout.meta
    flags = meta.aux_flags.get(clean_flag)
    profiles = []
    for mc, row_scores in zip(ensemble.classifiers, scores):
        captured = np.flatnonzero(row_scores > 0)
        gt = meta.ground_truth[captured]
        dist = None
        res_mean = res_sd = None
        purity = None
        if ensemble.task == "regression":
            if captured.size:
                residuals = meta.prediction[captured] - gt
                res_mean = float(residuals.mean())
                res_sd = float(residuals.std())
        else:
            values, counts = np.unique(gt, return_counts=True)
            dist = {float(v): int(c) for v, c in zip(values, counts)}
            if captured.size:
                if mc.action.kind == "label_override":
                    purity = float(np.mean(gt == mc.action.value))
        clean_fraction = None
        if flags is not None and captured.size:
            clean_fraction = float(flags[captured].mean())
        profiles.append(
            BiasProfile(
                mode_id=mc.mode_id,
                captured=int(captured.size),
                ground_truth_distribution=dist,
                residual_mean=res_mean,
                residual_sd=res_sd,
                purity=purity,
                clean_fraction=clean_fraction,
            )
        )
    return profiles


def correct(ensemble: CorrectionEnsemble, features, original_prediction: float):
    """Adjust one prediction; returns (corrected value, trace).

    The trace lists every firing classifier with its score and action, plus
    which mode (if any) won and what was applied.
    """
    scores = ensemble.scores(features)[:, 0] if ensemble.classifiers else np.empty(0)
    fired = [
        (mc.mode_id, float(s), mc.action)
        for mc, s in zip(ensemble.classifiers, scores)
        if s > 0
    ]
    trace = {
        "fired": [
            {"mode_id": mid, "score": s, "action": {"kind": a.kind, "value": a.value}}
            for mid, s, a in fired
        ],
        "applied": None,
    }
    if not fired:
        return original_prediction, trace
    # highest score wins; ties to the lowest mode id
    winner = max(fired, key=lambda f: (f[1], -f[0]))
    mode_id, _, action = winner
    if action.kind == "label_override":
        corrected = action.value
    else:
        corrected = original_prediction - action.value
    trace["applied"] = {
        "mode_id": mode_id,
        "action": {"kind": action.kind, "value": action.value},
    }
    return corrected, trace


def apply_corrections(ensemble: CorrectionEnsemble, d: Dataset) -> np.ndarray:
    """Vectorized correction of every prediction in a dataset."""
    corrected = d.meta.prediction.astype(np.float64).copy()
    if not ensemble.classifiers:
        return corrected
    scores = ensemble.scores(d.features)
    fired = scores > 0
    any_fired = fired.any(axis=0)
    masked = np.where(fired, scores, -np.inf)
    winners = masked.argmax(axis=0)  # argmax takes the first (lowest mode id) on ties
    for i in np.flatnonzero(any_fired):
        action = ensemble.classifiers[winners[i]].action
        if action.kind == "label_override":
            corrected[i] = action.value
        else:
            corrected[i] = corrected[i] - action.value
    return corrected


def evaluate_ensemble(
    ensemble: CorrectionEnsemble, test: Dataset, clean_flag: str = "clean"
) -> dict:
    """Before/after metrics of the correction layer on a labeled dataset."""
    meta = test.meta
    gt = meta.ground_truth
    base_pred = meta.prediction
    corrected = apply_corrections(ensemble, test)

    if ensemble.task == "regression":
        tol = ensemble.regression_tolerance
        base_correct = np.abs(base_pred - gt) <= tol
        corr_correct = np.abs(corrected - gt) <= tol
        extras = {
            "rmse_before": float(np.sqrt(np.mean((base_pred - gt) ** 2))),
            "rmse_after": float(np.sqrt(np.mean((corrected - gt) ** 2))),
        }
    else:
        base_correct = base_pred == gt
        corr_correct = corrected == gt
        extras = {}

    scores = ensemble.scores(test.features) if ensemble.classifiers else np.zeros((0, test.row_count))
    fired = scores > 0
    corrected_rows = np.flatnonzero(fired.any(axis=0)) if ensemble.classifiers else np.empty(0, dtype=np.intp)

    flags = meta.aux_flags.get(clean_flag)
    clean_fraction = None
    if flags is not None:
        clean_fraction = (
            float(flags[corrected_rows].mean()) if corrected_rows.size else 0.0
        )

    capture_counts = {
        mc.mode_id: int(fired[k].sum()) for k, mc in enumerate(ensemble.classifiers)
    }
    return {
        "accuracy": float(base_correct.mean()),
        "corrected_accuracy": float(corr_correct.mean()),
        "clean_fraction": clean_fraction,
        "corrected_count": int(corrected_rows.size),
        "capture_counts": capture_counts,
        **extras,
    }
