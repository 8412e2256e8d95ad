"""
Tests for z-score scaling, column algebra and table I/O.
"""

import json

import numpy as np
import pytest

from sentifuse.core.exceptions import DataError, ValidationError
from sentifuse.core.models import FeatureMatrix, LabeledDataset
from sentifuse.core.tables import (
    concat_columns,
    load_table,
    pad_columns,
    read_manifest,
    save_table,
    zscore_apply,
    zscore_fit,
    zscore_inverse,
)


pytestmark = pytest.mark.unit


class TestZScore:
    """Population-std scaling with constant-column handling."""

    def test_fit_two_values(self):
        stats = zscore_fit(FeatureMatrix.from_array(np.array([[1.0], [3.0]])))
        np.testing.assert_allclose(stats.mean, [2.0])
        np.testing.assert_allclose(stats.std, [1.0])

    def test_constant_column_flagged(self):
        stats = zscore_fit(FeatureMatrix.from_array(np.array([[5.0], [5.0], [5.0]])))
        assert stats.std[0] == 0.0
        assert stats.constant.tolist() == [True]

    def test_single_row(self):
        stats = zscore_fit(FeatureMatrix.from_array(np.array([[0.0]])))
        assert stats.mean[0] == 0.0 and stats.std[0] == 0.0

    def test_empty_input_rejected(self):
        with pytest.raises(ValidationError, match="empty input"):
            zscore_fit(FeatureMatrix(np.zeros((0, 2)), ("a", "b")))

    def test_apply(self):
        m = FeatureMatrix(np.array([[1.0, 5.0], [3.0, 5.0]]), ("x", "c"))
        scaled = zscore_apply(m, zscore_fit(m))
        np.testing.assert_allclose(scaled.values[:, 0], [-1.0, 1.0])
        np.testing.assert_array_equal(scaled.values[:, 1], [0.0, 0.0])

    def test_applied_columns_have_zero_mean(self):
        m = FeatureMatrix.from_array(np.random.default_rng(0).normal(3.0, 2.0, size=(50, 4)))
        scaled = zscore_apply(m, zscore_fit(m))
        np.testing.assert_allclose(scaled.values.mean(axis=0), 0.0, atol=1e-12)

    def test_inverse_roundtrip(self):
        m = FeatureMatrix.from_array(np.random.default_rng(1).normal(size=(20, 3)) * 10.0)
        stats = zscore_fit(m)
        back = zscore_inverse(zscore_apply(m, stats), stats)
        np.testing.assert_allclose(back.values, m.values, rtol=1e-10)

    def test_column_mismatch(self):
        stats = zscore_fit(FeatureMatrix.from_array(np.ones((2, 2))))
        with pytest.raises(ValidationError, match="column mismatch"):
            zscore_apply(FeatureMatrix.from_array(np.ones((2, 3))), stats)


class TestColumnAlgebra:
    def test_concat_shape_and_order(self):
        a = FeatureMatrix.from_array(np.array([[1.0, 2.0], [3.0, 4.0]]), "a")
        b = FeatureMatrix.from_array(np.array([[9.0], [8.0]]), "b")
        joined = concat_columns(a, b)
        assert joined.cols == 3
        np.testing.assert_array_equal(joined.values[0], [1.0, 2.0, 9.0])
        assert joined.col_names == ("a_0", "a_1", "b_0")

    def test_concat_with_empty_is_identity(self):
        a = FeatureMatrix.from_array(np.eye(3), "a")
        assert concat_columns(a, FeatureMatrix.empty(3)) == a

    def test_concat_is_associative(self):
        a, b, c = (FeatureMatrix.from_array(np.full((2, 1), v), p) for v, p in ((1.0, "a"), (2.0, "b"), (3.0, "c")))
        assert concat_columns(concat_columns(a, b), c) == concat_columns(a, concat_columns(b, c))

    def test_concat_row_mismatch(self):
        with pytest.raises(ValidationError, match="row mismatch"):
            concat_columns(FeatureMatrix.empty(2), FeatureMatrix.empty(3))

    def test_pad(self):
        padded = pad_columns(FeatureMatrix.from_array(np.ones((2, 3))), 5)
        assert padded.cols == 5
        np.testing.assert_array_equal(padded.values[:, 3:], 0.0)
        assert padded.col_names[3:] == ("pad_3", "pad_4")

    def test_pad_to_current_width(self):
        m = FeatureMatrix.from_array(np.ones((2, 3)))
        assert pad_columns(m, 3) is m

    def test_pad_cannot_truncate(self):
        with pytest.raises(ValidationError, match="cannot truncate"):
            pad_columns(FeatureMatrix.from_array(np.ones((2, 3))), 2)


class TestTableIO:
    def test_csv_with_label(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b,label\n1,2,0\n")
        m, labels = load_table(path, label_column="label")
        assert m.col_names == ("a", "b")
        np.testing.assert_array_equal(m.values, [[1.0, 2.0]])
        assert labels.tolist() == [0]

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b,label\n1,2,0\n3,4\n")
        with pytest.raises(DataError, match="row 2: expected 3 fields"):
            load_table(path)

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a\nfoo\n")
        with pytest.raises(DataError, match="non-numeric"):
            load_table(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="file not found"):
            load_table(tmp_path / "absent.csv")

    def test_missing_values_allowed_on_request(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n1,\nNaN,2\n")
        with pytest.raises(DataError, match="missing value"):
            load_table(path)
        m, _ = load_table(path, allow_missing=True)
        assert np.isnan(m.values[0, 1]) and np.isnan(m.values[1, 0])

    def test_jsonl_matches_csv(self, tmp_path):
        csv_path = tmp_path / "t.csv"
        csv_path.write_text("a,b,label\n1,2,0\n3.5,-4,1\n")
        jsonl_path = tmp_path / "t.jsonl"
        jsonl_path.write_text(
            "\n".join(json.dumps(r) for r in ({"a": 1, "b": 2, "label": 0}, {"a": 3.5, "b": -4, "label": 1})) + "\n"
        )
        m_csv, y_csv = load_table(csv_path, label_column="label")
        m_jsonl, y_jsonl = load_table(jsonl_path, label_column="label")
        assert m_csv == m_jsonl
        assert y_csv.tolist() == y_jsonl.tolist()

    @pytest.mark.parametrize("suffix", ["csv", "jsonl"])
    def test_save_load_keeps_full_precision(self, tmp_path, suffix):
        values = np.array([[1.0 / 3.0, -2.5e-300], [np.pi, 1e17 + 1.0]])
        m = FeatureMatrix(values, ("x", "y"))
        path = save_table(m, tmp_path / f"t.{suffix}", labels=[4, 5])
        loaded, labels = load_table(path, label_column="label")
        assert loaded == m
        assert labels.tolist() == [4, 5]

    def test_unsupported_format(self, tmp_path):
        with pytest.raises(DataError, match="unsupported table format"):
            load_table(tmp_path / "t.parquet")

    def test_manifest_requires_columns(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text('transcript,label\n"hello, world",3\n')
        assert read_manifest(path, ["transcript", "label"]) == [{"transcript": "hello, world", "label": "3"}]
        with pytest.raises(DataError, match="clip_path"):
            read_manifest(path, ["clip_path"])


class TestLabeledDataset:
    def test_rows_must_align(self, small_dataset):
        with pytest.raises(DataError, match="row counts differ"):
            LabeledDataset(small_dataset.text, small_dataset.audio.take_rows([0, 1]), small_dataset.video, small_dataset.labels)

    def test_take_keeps_views_together(self, small_dataset):
        part = small_dataset.take([5, 0])
        np.testing.assert_array_equal(part.text.values, small_dataset.text.values[[5, 0]])
        np.testing.assert_array_equal(part.video.values[:, 0], [5.0, 0.0])
        assert part.labels.tolist() == [1, 0]

    def test_split_by_tag(self, small_dataset):
        tags = ["train"] * 8 + ["val"] * 2 + ["test"] * 2
        tagged = small_dataset.with_split_tags(tags)
        assert tagged.split("val").rows == 2
        assert tagged.split("test").labels.tolist() == [2, 2]

    def test_arrays_are_read_only(self, small_dataset):
        with pytest.raises(ValueError):
            small_dataset.text.values[0, 0] = 1.0
