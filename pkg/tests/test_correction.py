import logging

import numpy as np
import pytest

from conftest import make_dataset
from failmap.correction import (
    ClassifierSpec,
    CorrectionAction,
    CorrectionEnsemble,
    GaussianNBModel,
    LinearModel,
    ModeClassifier,
    Standardizer,
    _gradient_descent,
    correct,
    evaluate_bias,
    evaluate_ensemble,
    fit_classifier,
    logistic_loss_grad,
    select_C,
    squared_hinge_loss_grad,
    stratified_folds,
    train_ensemble,
)
from failmap.errors import ConfigError, DegenerateDataError, InputError
from failmap.modes import FailureMode
from oracles import central_difference_gradient


def blobs(seed=0, n=40, gap=6.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    X[n // 2 :] += gap
    y = np.zeros(n, dtype=np.int64)
    y[n // 2 :] = 1
    return X, y


def mode_of(members, mode_id=0, label=0.0):
    members = np.asarray(members, dtype=np.intp)
    return FailureMode(
        id=mode_id,
        node_ids=(0,),
        members=members,
        ground_truth_mode=label,
        accuracy=0.0,
        size=members.size,
        provenance="automatic",
    )


class TestFitClassifier:
    @pytest.mark.parametrize("kind", ["logistic_regression", "linear_svm"])
    def test_separable_blobs_perfect_training_accuracy(self, kind):
        X, y = blobs()
        model = fit_classifier(X, y, ClassifierSpec(kind=kind, C=1.0))
        assert np.mean(model.predict(X) == y) == 1.0

    def test_gnb_boundary_at_midpoint(self):
        rng = np.random.default_rng(1)
        X = np.concatenate([rng.normal(-2, 1, 4000), rng.normal(2, 1, 4000)])[:, None]
        y = np.concatenate([np.zeros(4000), np.ones(4000)]).astype(np.int64)
        model = fit_classifier(X, y, ClassifierSpec(kind="gaussian_nb"))
        # bisect the decision function for its zero crossing
        lo, hi = -2.0, 2.0
        for _ in range(60):
            mid = (lo + hi) / 2
            if model.decision_function(np.array([[mid]]))[0] > 0:
                hi = mid
            else:
                lo = mid
        assert abs((lo + hi) / 2) < 0.1

    def test_gnb_posterior_sums_to_one(self):
        X, y = blobs(seed=2)
        model = fit_classifier(X, y, ClassifierSpec(kind="gaussian_nb"))
        totals = model.posterior(X).sum(axis=1)
        assert np.all(np.abs(totals - 1.0) < 1e-9)

    def test_single_class_rejected(self):
        X = np.zeros((5, 2))
        with pytest.raises(DegenerateDataError):
            fit_classifier(X, np.ones(5, dtype=np.int64), ClassifierSpec())

    def test_lr_gradient_at_zero_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(25, 4))
        t = np.where(rng.random(25) < 0.5, 1.0, -1.0)
        w0 = np.zeros(4)
        _, grad_w, grad_b = logistic_loss_grad(w0, 0.0, X, t, 1.0)

        def loss_only(w, b):
            return logistic_loss_grad(np.asarray(w), b, X, t, 1.0)[0]

        fd_w, fd_b = central_difference_gradient(loss_only, w0.tolist(), 0.0, step=1e-5)
        rel = np.abs(grad_w - np.asarray(fd_w)) / np.maximum(np.abs(grad_w), 1e-12)
        assert rel.max() < 1e-6
        assert abs(grad_b - fd_b) / max(abs(grad_b), 1e-12) < 1e-6

    @pytest.mark.parametrize("loss_grad", [logistic_loss_grad, squared_hinge_loss_grad])
    def test_gradients_match_finite_differences_at_random_points(self, loss_grad):
        rng = np.random.default_rng(4)
        for _ in range(20):
            n, k = int(rng.integers(5, 30)), int(rng.integers(1, 6))
            X = rng.normal(size=(n, k))
            t = np.where(rng.random(n) < 0.5, 1.0, -1.0)
            w = rng.normal(size=k)
            b = float(rng.normal())
            C = float(rng.choice([0.01, 1.0, 100.0]))
            _, grad_w, grad_b = loss_grad(w, b, X, t, C)

            def loss_only(wv, bv):
                return loss_grad(np.asarray(wv), bv, X, t, C)[0]

            fd_w, fd_b = central_difference_gradient(loss_only, w.tolist(), b, step=1e-5)
            full = np.concatenate([grad_w, [grad_b]])
            fd = np.concatenate([fd_w, [fd_b]])
            rel = np.abs(full - fd) / np.maximum(np.abs(full), 1e-8)
            assert rel.max() < 1e-5

    @pytest.mark.parametrize("kind", ["logistic_regression", "linear_svm"])
    def test_loss_non_increasing_per_step(self, kind):
        from failmap.correction import LOSSES

        X, y = blobs(seed=5)
        t = np.where(y == 1, 1.0, -1.0)
        trace = []
        _gradient_descent(LOSSES[kind], X, t, 1.0, None, trace=trace)
        diffs = np.diff(trace)
        assert (diffs <= 1e-15).all()

    def test_balanced_class_weight_option(self):
        X, y = blobs(seed=6, n=60)
        model = fit_classifier(X, y, ClassifierSpec(kind="linear_svm", class_weight="balanced"))
        assert np.mean(model.predict(X) == y) == 1.0


class TestSelectC:
    def test_single_value_grid(self):
        X, y = blobs(seed=7)
        spec = ClassifierSpec(kind="linear_svm", c_grid=(0.5,))
        assert select_C(X, y, spec) == 0.5

    def test_returns_grid_member(self):
        X, y = blobs(seed=8)
        spec = ClassifierSpec(kind="logistic_regression")
        assert select_C(X, y, spec) in spec.c_grid

    def test_underfit_case_prefers_larger_C(self):
        # tight margin between imbalanced classes: small C collapses to the
        # majority class, larger C separates
        rng = np.random.default_rng(9)
        n_pos = 12
        X = np.concatenate([rng.normal(0, 1, size=(300, 3)), rng.normal(4.5, 1, size=(n_pos, 3))])
        y = np.concatenate([np.zeros(300), np.ones(n_pos)]).astype(np.int64)
        spec = ClassifierSpec(kind="linear_svm", c_grid=(0.001, 1000.0), folds=3)
        chosen = select_C(X, y, spec)

        # direct CV computation as the check
        folds = stratified_folds(y, 3)
        all_rows = np.arange(y.size)
        means = {}
        for c in spec.c_grid:
            accs = []
            for test_rows in folds:
                train_rows = np.setdiff1d(all_rows, test_rows)
                model = fit_classifier(X[train_rows], y[train_rows], spec.with_C(c))
                accs.append(np.mean(model.predict(X[test_rows]) == y[test_rows]))
            means[c] = np.mean(accs)
        assert means[1000.0] > means[0.001]
        assert chosen == 1000.0

    def test_tie_prefers_smaller_C(self):
        X, y = blobs(seed=10)  # trivially separable: every C ties at 100%
        spec = ClassifierSpec(kind="linear_svm", c_grid=(100.0, 0.1, 10.0))
        assert select_C(X, y, spec) == 0.1

    def test_gnb_has_no_C(self):
        X, y = blobs(seed=11)
        with pytest.raises(ConfigError):
            select_C(X, y, ClassifierSpec(kind="gaussian_nb"))

    def test_stratified_folds_cover_and_balance(self):
        y = np.array([0] * 17 + [1] * 5)
        folds = stratified_folds(y, 4)
        together = np.sort(np.concatenate(folds))
        assert together.tolist() == list(range(22))
        for fold in folds:
            assert y[fold].sum() >= 1  # every fold holds a positive


class TestTrainEnsemble:
    def test_one_classifier_per_mode(self, planted):
        modes = [mode_of(range(800, 820), 0, 3.0), mode_of(range(820, 840), 1, 4.0)]
        ensemble = train_ensemble(modes, planted, ClassifierSpec(kind="linear_svm", C=100.0))
        assert len(ensemble.classifiers) == 2
        assert ensemble.standardizer is not None

    def test_label_pure_mode_overrides_with_its_label(self, planted):
        mode = mode_of(range(800, 830), 0, label=5.0)
        ensemble = train_ensemble([mode], planted, ClassifierSpec(kind="linear_svm", C=100.0))
        action = ensemble.classifiers[0].action
        assert action.kind == "label_override" and action.value == 5.0

    def test_regression_offset_is_mean_residual(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(50, 3))
        gt = np.zeros(50)
        pred = np.zeros(50)
        pred[:10] = 100.0  # the mode's residuals average +100
        d = make_dataset(X, ground_truth=gt, prediction=pred)
        ensemble = train_ensemble(
            [mode_of(range(10))], d, ClassifierSpec(kind="linear_svm", C=100.0),
            task="regression",
        )
        assert ensemble.classifiers[0].action.kind == "offset"
        assert ensemble.classifiers[0].action.value == pytest.approx(100.0)

    def test_degenerate_mode_skipped_with_warning(self, planted, caplog):
        whole = mode_of(range(planted.row_count))  # no rest class remains
        with caplog.at_level(logging.WARNING):
            ensemble = train_ensemble([whole], planted, ClassifierSpec(kind="linear_svm"))
        assert ensemble.classifiers == []
        assert any("skipping mode" in r.message for r in caplog.records)

    def test_gnb_uses_raw_features(self, planted):
        ensemble = train_ensemble(
            [mode_of(range(800, 830))], planted, ClassifierSpec(kind="gaussian_nb")
        )
        assert ensemble.standardizer is None


def tiny_ensemble(actions, weights, intercepts, task="classification", tolerance=0.0):
    classifiers = [
        ModeClassifier(
            mode_id=i,
            model=LinearModel(weights=np.asarray(w, dtype=float), intercept=b, kind="linear_svm"),
            action=a,
        )
        for i, (a, w, b) in enumerate(zip(actions, weights, intercepts))
    ]
    return CorrectionEnsemble(
        classifiers=classifiers,
        task=task,
        classifier_kind="linear_svm",
        feature_count=len(weights[0]),
        standardizer=None,
        regression_tolerance=tolerance,
    )


class TestCorrect:
    def test_no_fire_returns_original(self):
        ens = tiny_ensemble([CorrectionAction("label_override", 5.0)], [[1.0]], [-10.0])
        value, trace = correct(ens, np.array([0.0]), 8.0)
        assert value == 8.0 and trace["fired"] == [] and trace["applied"] is None

    def test_single_fire_override(self):
        ens = tiny_ensemble([CorrectionAction("label_override", 5.0)], [[1.0]], [0.0])
        value, trace = correct(ens, np.array([2.0]), 8.0)
        assert value == 5.0
        assert trace["applied"]["mode_id"] == 0

    def test_regression_offset_subtracted(self):
        ens = tiny_ensemble(
            [CorrectionAction("offset", 100.0)], [[1.0]], [0.0], task="regression"
        )
        value, _ = correct(ens, np.array([1.0]), 1600.0)
        assert value == 1500.0

    def test_multi_fire_highest_score_wins(self):
        ens = tiny_ensemble(
            [CorrectionAction("label_override", 1.0), CorrectionAction("label_override", 2.0)],
            [[1.0], [2.0]],
            [0.0, 0.0],
        )
        value, trace = correct(ens, np.array([3.0]), 9.0)
        assert value == 2.0  # scores 3 vs 6
        assert len(trace["fired"]) == 2

    def test_exact_tie_goes_to_lowest_mode_id(self):
        ens = tiny_ensemble(
            [CorrectionAction("label_override", 1.0), CorrectionAction("label_override", 2.0)],
            [[1.0], [1.0]],
            [0.0, 0.0],
        )
        value, _ = correct(ens, np.array([3.0]), 9.0)
        assert value == 1.0

    def test_dimension_mismatch(self):
        ens = tiny_ensemble([CorrectionAction("label_override", 5.0)], [[1.0, 1.0]], [0.0])
        with pytest.raises(InputError):
            correct(ens, np.array([1.0]), 8.0)

    def test_pure_function_repeated_calls(self):
        ens = tiny_ensemble([CorrectionAction("label_override", 5.0)], [[1.0]], [0.0])
        results = {correct(ens, np.array([2.0]), 8.0)[0] for _ in range(5)}
        assert results == {5.0}


class TestEvaluate:
    def test_never_firing_ensemble_keeps_accuracy(self, planted):
        ens = tiny_ensemble(
            [CorrectionAction("label_override", 5.0)], [[0.0] * 10], [-1.0]
        )
        result = evaluate_ensemble(ens, planted)
        assert result["corrected_accuracy"] == result["accuracy"]
        assert result["corrected_count"] == 0

    def test_bias_profile_purity_on_planted_capture(self):
        rng = np.random.default_rng(13)
        X = rng.normal(size=(40, 1))
        X[:10] += 50.0
        gt = np.zeros(40)
        gt[:10] = 7.0
        d = make_dataset(X, ground_truth=gt, prediction=np.full(40, 1.0), flags={"clean": np.zeros(40)})
        ens = tiny_ensemble([CorrectionAction("label_override", 7.0)], [[1.0]], [-25.0])
        (profile,) = evaluate_bias(ens, d)
        assert profile.captured == 10
        assert profile.purity == 1.0
        assert profile.clean_fraction == 0.0
        assert profile.ground_truth_distribution == {7.0: 10}

    def test_bias_profile_empty_capture(self, planted):
        ens = tiny_ensemble([CorrectionAction("label_override", 5.0)], [[0.0] * 10], [-1.0])
        (profile,) = evaluate_bias(ens, planted)
        assert profile.captured == 0
        assert profile.purity is None and profile.clean_fraction is None

    def test_clean_fraction_of_corrected_points(self):
        X = np.array([[10.0], [10.0], [-10.0], [-10.0]])
        d = make_dataset(
            X,
            ground_truth=[1, 1, 0, 0],
            prediction=[0, 0, 0, 0],
            flags={"clean": [1, 0, 1, 1]},
        )
        ens = tiny_ensemble([CorrectionAction("label_override", 1.0)], [[1.0]], [0.0])
        result = evaluate_ensemble(ens, d)
        assert result["corrected_count"] == 2
        assert result["clean_fraction"] == 0.5
        assert result["accuracy"] == 0.5 and result["corrected_accuracy"] == 1.0

    def test_regression_rmse_reporting(self):
        X = np.array([[10.0], [-10.0]])
        d = make_dataset(X, ground_truth=[0.0, 0.0], prediction=[100.0, 0.0])
        ens = tiny_ensemble(
            [CorrectionAction("offset", 100.0)], [[1.0]], [0.0],
            task="regression", tolerance=1.0,
        )
        result = evaluate_ensemble(ens, d)
        assert result["rmse_before"] == pytest.approx(100.0 / np.sqrt(2))
        assert result["rmse_after"] == pytest.approx(0.0)
        assert result["corrected_accuracy"] == 1.0
