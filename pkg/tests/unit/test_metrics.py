"""
Tests for evaluation metrics.
"""

import math

import numpy as np
import pytest

from sentifuse.core.exceptions import DataError, ValidationError
from sentifuse.training.metrics import (
    binary_auc,
    confusion_matrix,
    log_loss,
    pr_curve,
    prf_scores,
    report_from_probabilities,
    roc_auc,
    roc_curve,
)


pytestmark = pytest.mark.unit


def brute_force_auc(scores, positive):
    pos = scores[positive]
    neg = scores[~positive]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (pos.size * neg.size)


class TestAuc:
    def test_hand_example(self):
        scores = np.array([0.9, 0.6, 0.4, 0.2])
        positive = np.array([True, False, True, False])
        assert binary_auc(scores, positive) == pytest.approx(0.75)

    def test_all_ties(self):
        assert binary_auc(np.full(6, 0.3), np.array([True, False] * 3)) == 0.5

    def test_matches_pairwise_definition(self):
        gen = np.random.default_rng(11)
        scores = np.round(gen.random(500), 2)  # plenty of ties
        positive = gen.random(500) < 0.3
        assert binary_auc(scores, positive) == pytest.approx(brute_force_auc(scores, positive), abs=1e-12)

    def test_undefined_without_negatives(self):
        assert binary_auc(np.array([0.1, 0.2]), np.array([True, True])) is None

    def test_roc_points(self):
        curve = roc_curve(np.array([0.9, 0.6, 0.4, 0.2]), np.array([True, False, True, False]))
        np.testing.assert_array_equal(curve.fpr, [0.0, 0.0, 0.5, 0.5, 1.0])
        np.testing.assert_array_equal(curve.tpr, [0.0, 0.5, 0.5, 1.0, 1.0])
        assert math.isinf(curve.thresholds[0])

    def test_macro_skips_undefined_classes(self):
        probs = np.array([[0.7, 0.2, 0.1], [0.3, 0.6, 0.1], [0.6, 0.3, 0.1], [0.2, 0.7, 0.1]])
        report = roc_auc(probs, [0, 1, 0, 1])
        assert report.per_class[2] is None
        assert report.macro == pytest.approx(1.0)

    def test_undefined_everywhere(self):
        with pytest.raises(ValidationError, match="AUC undefined"):
            roc_auc(np.full((3, 2), 0.5), [0, 0, 0])


class TestClassificationScores:
    def test_confusion_matrix(self):
        cm = confusion_matrix([0, 0, 1, 1, 2], [0, 1, 1, 1, 0], 3)
        np.testing.assert_array_equal(cm, [[1, 1, 0], [0, 2, 0], [1, 0, 0]])

    def test_confusion_rejects_unknown_labels(self):
        with pytest.raises(ValidationError):
            confusion_matrix([0, 3], [0, 1], 3)

    def test_prf_hand_example(self):
        scores = prf_scores(np.array([[2, 0], [1, 1]]))
        np.testing.assert_allclose(scores.precision, [2 / 3, 1.0])
        np.testing.assert_allclose(scores.recall, [1.0, 0.5])
        np.testing.assert_allclose(scores.f1, [0.8, 2 / 3])
        np.testing.assert_array_equal(scores.support, [2, 2])
        assert scores.weighted_f1 == pytest.approx((0.8 + 2 / 3) / 2)

    def test_zero_denominators(self):
        scores = prf_scores(np.array([[3, 0], [0, 0]]))
        assert scores.precision[1] == 0.0 and scores.recall[1] == 0.0 and scores.f1[1] == 0.0

    def test_log_loss_clamps(self):
        assert log_loss(np.array([[0.0, 1.0]]), [0]) == pytest.approx(27.631021, abs=1e-5)

    def test_log_loss_uniform(self):
        assert log_loss(np.full((5, 6), 1 / 6), [0, 1, 2, 3, 4]) == pytest.approx(math.log(6))


class TestPrCurve:
    def test_ends_at_prevalence(self):
        probs = np.array([[0.9, 0.1], [0.8, 0.2], [0.3, 0.7], [0.4, 0.6], [0.2, 0.8]])
        curve = pr_curve(probs, [0, 1, 1, 0, 1], 1)
        assert curve.recall[-1] == 1.0
        assert curve.precision[-1] == pytest.approx(3 / 5)
        assert np.all(np.diff(curve.thresholds) < 0)

    def test_no_positives(self):
        with pytest.raises(ValidationError, match="class 1"):
            pr_curve(np.full((2, 2), 0.5), [0, 0], 1)


class TestReport:
    def test_uniform_predictor_picks_class_zero(self):
        probs = np.full((6, 3), 1 / 3)
        report = report_from_probabilities(probs, [0, 1, 2, 0, 1, 2])
        np.testing.assert_array_equal(report.confusion[:, 0], [2, 2, 2])
        assert report.accuracy == pytest.approx(1 / 3)
        assert report.macro_auc == 0.5

    def test_to_dict(self):
        probs = np.array([[0.8, 0.2], [0.3, 0.7], [0.6, 0.4]])
        d = report_from_probabilities(probs, [0, 1, 1], ["neg", "pos"], variant="text").to_dict()
        assert d["variant"] == "text"
        assert d["n_samples"] == 3
        assert d["confusion_matrix"] == [[1, 0], [1, 1]]
        assert [c["name"] for c in d["per_class"]] == ["neg", "pos"]

    def test_empty(self):
        with pytest.raises(DataError):
            report_from_probabilities(np.zeros((0, 2)), [])
