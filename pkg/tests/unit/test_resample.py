"""
Tests for label remapping, stratified splits and oversampling.
"""

from collections import Counter

import numpy as np
import pytest

from sentifuse.core.config_schemas import DEFAULT_LABEL_MAP, LabelMap
from sentifuse.core.exceptions import DataError, ValidationError
from sentifuse.core.models import FeatureMatrix, LabeledDataset
from sentifuse.core.rng import SeededRng
from sentifuse.data.resample import (
    class_counts,
    nested_holdout_split_tags,
    oversample_to_targets,
    rebalance_training_split,
    remap_labels,
    stratified_split,
    stratified_split_tags,
)


pytestmark = pytest.mark.unit


def dataset(labels):
    labels = np.asarray(labels)
    n = labels.shape[0]
    row_ids = np.arange(n, dtype=np.float64)
    return LabeledDataset(
        FeatureMatrix.from_array(row_ids, "t"),
        FeatureMatrix.from_array(row_ids * 10.0, "a"),
        FeatureMatrix.from_array(row_ids * 100.0, "v"),
        labels,
    )


class TestRemap:
    def test_default_map(self):
        np.testing.assert_array_equal(remap_labels([0, 1, 2, 3, 4, 5, 6, 7], LabelMap()), [0, 1, 1, 2, 2, 3, 4, 5])

    def test_plain_mapping(self):
        np.testing.assert_array_equal(remap_labels([2, 2, 7], DEFAULT_LABEL_MAP), [1, 1, 5])

    def test_unknown_label_is_named(self):
        with pytest.raises(ValidationError, match="label 8"):
            remap_labels([0, 8], DEFAULT_LABEL_MAP)


class TestStratifiedSplit:
    def test_sizes_per_class(self):
        labels = [0] * 60 + [1] * 40
        tags = stratified_split_tags(labels, (0.8, 0.1, 0.1), SeededRng(0))
        counts = Counter(zip(labels, tags))
        assert (counts[(0, "train")], counts[(0, "val")], counts[(0, "test")]) == (48, 6, 6)
        assert (counts[(1, "train")], counts[(1, "val")], counts[(1, "test")]) == (32, 4, 4)

    def test_round_half_up(self):
        tags = stratified_split_tags([0] * 5, (0.8, 0.1, 0.1), SeededRng(0))
        assert Counter(tags) == {"train": 3, "val": 1, "test": 1}

    def test_seed_determines_the_split(self):
        labels = [0] * 30 + [1] * 30
        a = stratified_split_tags(labels, (0.8, 0.1, 0.1), SeededRng(3))
        b = stratified_split_tags(labels, (0.8, 0.1, 0.1), SeededRng(3))
        c = stratified_split_tags(labels, (0.8, 0.1, 0.1), SeededRng(4))
        assert a == b
        assert a != c

    def test_tiny_class(self):
        with pytest.raises(DataError, match="class 1: 2"):
            stratified_split_tags([0, 0, 0, 1, 1], (0.8, 0.1, 0.1), SeededRng(0))

    def test_bad_fractions(self):
        with pytest.raises(ValidationError):
            stratified_split_tags([0] * 10, (0.5, 0.2, 0.2), SeededRng(0))

    def test_views_stay_aligned(self):
        split = stratified_split(dataset([0] * 10 + [1] * 10), rng=SeededRng(1))
        for tag in ("train", "val", "test"):
            part = split.split(tag)
            np.testing.assert_array_equal(part.audio.values, part.text.values * 10.0)
            np.testing.assert_array_equal(part.video.values, part.text.values * 100.0)

    def test_nested_holdout(self):
        tags = nested_holdout_split_tags([0] * 50, 0.2, 0.1, SeededRng(0))
        assert Counter(tags) == {"train": 36, "val": 4, "test": 10}


class TestOversampling:
    def test_reaches_every_target(self):
        ds = dataset([0] * 5 + [1] * 3 + [2] * 8)
        out = oversample_to_targets(ds, {0: 10, 1: 9, 2: 4}, SeededRng(0))
        assert class_counts(out.labels) == {0: 10, 1: 9, 2: 8}

    def test_duplicates_whole_rows(self):
        ds = dataset([0] * 4 + [1] * 2)
        out = oversample_to_targets(ds, {0: 4, 1: 7}, SeededRng(2))
        np.testing.assert_array_equal(out.audio.values, out.text.values * 10.0)
        for row_id, label in zip(out.text.values[:, 0], out.labels):
            assert label == ds.labels[int(row_id)]

    def test_missing_target(self):
        with pytest.raises(DataError, match=r"\[1\]"):
            oversample_to_targets(dataset([0, 1]), {0: 3}, SeededRng(0))

    def test_only_training_rows_grow(self):
        split = stratified_split(dataset([0] * 20 + [1] * 10), rng=SeededRng(0))
        balanced = rebalance_training_split(split, {0: 16, 1: 16}, SeededRng(1))
        assert class_counts(balanced.split("train").labels) == {0: 16, 1: 16}
        assert balanced.split("val").rows == split.split("val").rows
        np.testing.assert_array_equal(balanced.split("test").text.values, split.split("test").text.values)
