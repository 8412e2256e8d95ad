"""
Tests for MoCap gap filling and GBDT probability stacking.
"""

import numpy as np
import pytest

from sentifuse.core.config_schemas import GbdtConfig, VideoSettings
from sentifuse.core.exceptions import DataError, ModelStateError
from sentifuse.core.models import FeatureMatrix
from sentifuse.core.rng import SeededRng
from sentifuse.features.video import (
    VideoFeaturizer,
    interpolate_missing,
    stack_with_gbdt,
    stratified_folds,
)


pytestmark = pytest.mark.unit

nan = float("nan")


@pytest.fixture
def table():
    gen = np.random.default_rng(2)
    labels = np.repeat([0, 1, 2], 10)
    values = gen.normal(size=(30, 4)) + labels[:, None]
    return FeatureMatrix.from_array(values, "v"), labels


class TestInterpolation:
    def test_interior_gap(self):
        filled = interpolate_missing(FeatureMatrix.from_array(np.array([1.0, nan, 3.0])))
        np.testing.assert_array_equal(filled.values[:, 0], [1.0, 2.0, 3.0])

    def test_edges_take_the_nearest_value(self):
        filled = interpolate_missing(FeatureMatrix.from_array(np.array([nan, 5.0, nan])))
        np.testing.assert_array_equal(filled.values[:, 0], [5.0, 5.0, 5.0])

    def test_median_fill(self):
        m = FeatureMatrix.from_array(np.array([1.0, nan, 2.0, 10.0]))
        np.testing.assert_array_equal(interpolate_missing(m, "median").values[:, 0], [1.0, 2.0, 2.0, 10.0])

    def test_complete_columns_untouched(self):
        m = FeatureMatrix(np.array([[1.0, nan], [2.0, 4.0]]), ("a", "b"))
        filled = interpolate_missing(m)
        np.testing.assert_array_equal(filled.values, [[1.0, 4.0], [2.0, 4.0]])

    def test_fully_missing_column(self):
        m = FeatureMatrix(np.array([[1.0, nan], [2.0, nan]]), ("ok", "hand_x"))
        with pytest.raises(DataError, match="hand_x"):
            interpolate_missing(m)


class TestStacking:
    def test_width_is_features_plus_classes(self, table):
        t, y = table
        stacked, model = stack_with_gbdt(t, y, GbdtConfig(n_rounds=3, max_depth=2), SeededRng(1))
        assert stacked.cols == t.cols + 3
        assert stacked.col_names[-3:] == ("gbdt_p0", "gbdt_p1", "gbdt_p2")
        np.testing.assert_allclose(stacked.values[:, -3:].sum(axis=1), 1.0)
        np.testing.assert_array_equal(stacked.values[:, : t.cols], t.values)

    def test_out_of_fold_rows_differ_from_in_sample(self, table):
        t, y = table
        config = GbdtConfig(n_rounds=3, max_depth=2, min_samples_leaf=2)
        in_sample, _ = stack_with_gbdt(t, y, config, SeededRng(1))
        oof, model = stack_with_gbdt(t, y, config, SeededRng(1), out_of_fold=True, n_folds=5)
        assert oof.cols == in_sample.cols
        assert not np.array_equal(oof.values, in_sample.values)
        applied, _ = stack_with_gbdt(t, None, model=model)
        np.testing.assert_array_equal(applied.values, in_sample.values)

    def test_needs_labels_or_model(self, table):
        t, _ = table
        with pytest.raises(ModelStateError):
            stack_with_gbdt(t, None)

    def test_folds_are_stratified_and_disjoint(self, table):
        _, y = table
        folds = stratified_folds(y, 5, SeededRng(0))
        assert sorted(np.concatenate(folds).tolist()) == list(range(30))
        for fold in folds:
            assert np.bincount(y[fold], minlength=3).tolist() == [2, 2, 2]


class TestVideoFeaturizer:
    def test_fit_then_transform(self, table):
        t, y = table
        featurizer = VideoFeaturizer(VideoSettings(out_of_fold=False), GbdtConfig(n_rounds=2, max_depth=2), n_classes=3)
        train = featurizer.fit_transform(t, y, SeededRng(4))
        restored = VideoFeaturizer.from_dict(featurizer.to_dict())
        np.testing.assert_array_equal(restored.transform(t).values, train.values)

    def test_plain_only_scales(self, table):
        t, y = table
        out = VideoFeaturizer(plain=True).fit_transform(t, y)
        assert out.cols == t.cols

    def test_transform_before_fit(self, table):
        with pytest.raises(ModelStateError):
            VideoFeaturizer().transform(table[0])
