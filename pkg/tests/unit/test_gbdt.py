"""
Tests for the multiclass softmax GBDT.
"""

import math

import numpy as np
import pytest

from sentifuse.core.config_schemas import GbdtConfig
from sentifuse.core.exceptions import NumericError, ValidationError
from sentifuse.core.rng import SeededRng
from sentifuse.learn.gbdt import (
    GbdtModel,
    best_split,
    gbdt_fit,
    gbdt_leaf_indices,
    gbdt_predict_proba,
    leaf_embeddings,
    softmax_loss,
    split_gain,
)
from sentifuse.learn.mathops import predict_labels


pytestmark = pytest.mark.unit


@pytest.fixture
def blobs():
    gen = np.random.default_rng(21)
    y = np.repeat([0, 1, 2], 20)
    X = gen.normal(size=(60, 3)) * 0.5
    X[:, 0] += 2.0 * y
    return X, y


class TestSplitSearch:
    def test_gain_formula(self):
        assert split_gain(1.0, 0.5, -1.0, 0.5, 1.0) == pytest.approx(0.5 * (1 / 1.5 + 1 / 1.5 - 0.0))

    def test_separable_boundary(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        grad = np.array([0.5, 0.5, -0.5, -0.5])
        hess = np.full(4, 0.25)
        split = best_split(X, grad, hess, l2_reg=1.0, min_samples_leaf=1)
        assert split.feature == 0
        assert split.threshold == 3.0
        assert split.n_left == 2
        assert split.gain == pytest.approx(2.0 / 3.0)

    def test_ties_prefer_the_lowest_feature(self):
        column = np.array([1.0, 2.0, 3.0, 4.0])
        X = np.column_stack([column, column])
        split = best_split(X, np.array([1.0, 1.0, -1.0, -1.0]), np.ones(4), 1.0, 1)
        assert split.feature == 0

    def test_min_samples_leaf_blocks_small_children(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        grad = np.array([1.0, -1.0, -1.0, -1.0])
        split = best_split(X, grad, np.ones(4), 1.0, min_samples_leaf=2)
        assert split is None or split.n_left == 2

    def test_constant_feature_has_no_split(self):
        assert best_split(np.ones((6, 1)), np.arange(6.0), np.ones(6), 1.0, 1) is None


class TestFit:
    def test_zero_rounds_is_uniform(self, blobs):
        X, y = blobs
        model = gbdt_fit(X, y, GbdtConfig(n_rounds=0))
        np.testing.assert_allclose(gbdt_predict_proba(model, X), 1.0 / 3.0)
        assert model.loss_trace == [pytest.approx(math.log(3.0))]

    def test_prior_base_score(self, blobs):
        X, y = blobs
        model = gbdt_fit(X[:50], y[:50], GbdtConfig(n_rounds=0, base_score="prior"))
        np.testing.assert_allclose(gbdt_predict_proba(model, X[:1])[0], [0.4, 0.4, 0.2])

    def test_loss_trace_does_not_increase(self, blobs):
        X, y = blobs
        model = gbdt_fit(X, y, GbdtConfig(n_rounds=10, max_depth=2, min_samples_leaf=2))
        assert len(model.loss_trace) == 11
        assert all(b <= a + 1e-12 for a, b in zip(model.loss_trace, model.loss_trace[1:]))
        assert model.loss_trace[-1] == pytest.approx(softmax_loss(model, X, y))

    def test_learns_the_blobs(self, blobs):
        X, y = blobs
        model = gbdt_fit(X, y, GbdtConfig(n_rounds=20, max_depth=2, min_samples_leaf=1))
        probs = gbdt_predict_proba(model, X)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)
        assert np.mean(predict_labels(probs) == y) > 0.95

    def test_tree_layout(self, blobs):
        X, y = blobs
        model = gbdt_fit(X, y, GbdtConfig(n_rounds=3, max_depth=2))
        assert model.n_trees == 9 and model.n_rounds == 3
        assert all(tree.depth <= 2 for tree in model.trees)

    def test_subsampling_is_seeded(self, blobs):
        X, y = blobs
        config = GbdtConfig(n_rounds=4, max_depth=2, subsample=0.5, colsample=0.67)
        a = gbdt_fit(X, y, config, SeededRng(5))
        b = gbdt_fit(X, y, config, SeededRng(5))
        assert a.to_json() == b.to_json()

    def test_subsampling_needs_an_rng(self, blobs):
        X, y = blobs
        with pytest.raises(ValidationError, match="SeededRng"):
            gbdt_fit(X, y, GbdtConfig(n_rounds=1, subsample=0.5))

    def test_single_class(self):
        with pytest.raises(ValidationError, match="two classes"):
            gbdt_fit(np.ones((3, 1)), [0, 0, 0])

    def test_non_finite_input(self):
        with pytest.raises(NumericError):
            gbdt_fit(np.array([[1.0], [np.nan]]), [0, 1])


class TestInference:
    def test_json_roundtrip_predicts_identically(self, blobs):
        X, y = blobs
        model = gbdt_fit(X, y, GbdtConfig(n_rounds=3, max_depth=3, min_samples_leaf=2))
        restored = GbdtModel.from_json(model.to_json())
        np.testing.assert_array_equal(gbdt_predict_proba(restored, X), gbdt_predict_proba(model, X))

    def test_width_mismatch(self, blobs):
        X, y = blobs
        model = gbdt_fit(X, y, GbdtConfig(n_rounds=1))
        with pytest.raises(ValidationError, match="column mismatch"):
            gbdt_predict_proba(model, X[:, :2])

    def test_leaf_one_hot_has_one_per_tree(self, blobs):
        X, y = blobs
        model = gbdt_fit(X, y, GbdtConfig(n_rounds=2, max_depth=2, min_samples_leaf=2))
        embedding = leaf_embeddings(model, X)
        assert embedding.cols == sum(tree.n_leaves for tree in model.trees)
        np.testing.assert_array_equal(embedding.values.sum(axis=1), model.n_trees)

    def test_leaf_index_encoding(self, blobs):
        X, y = blobs
        model = gbdt_fit(X, y, GbdtConfig(n_rounds=2, max_depth=2, min_samples_leaf=2))
        indices = gbdt_leaf_indices(model, X)
        embedding = leaf_embeddings(model, X, "index")
        assert embedding.cols == model.n_trees
        np.testing.assert_array_equal(embedding.values, indices)
        for t, tree in enumerate(model.trees):
            assert indices[:, t].max() < tree.n_leaves

    def test_unknown_encoding(self, blobs):
        X, y = blobs
        with pytest.raises(ValidationError):
            leaf_embeddings(gbdt_fit(X, y, GbdtConfig(n_rounds=1)), X, "binary")
