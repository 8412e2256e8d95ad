"""
Tests for run diagnostics export.
"""

import json

import numpy as np
import pytest

from sentifuse.core.tables import load_table
from sentifuse.training.export import export_history, history_table
from sentifuse.training.metrics import report_from_probabilities
from sentifuse.training.trainer import HISTORY_COLUMNS, EpochRecord, TrainHistory


pytestmark = pytest.mark.unit


@pytest.fixture
def history():
    records = [
        EpochRecord(1, 1.1, 0.40, 1.0, 0.45, 0.001, 0.731),
        EpochRecord(2, 0.9, 0.55, 0.8, 0.60, 0.001, 0.702),
        EpochRecord(3, 0.7, 0.70, 0.85, 0.58, 0.0005, 0.689),
    ]
    return TrainHistory(records=records, best_epoch=2, best_val_loss=0.8, lr_reductions=[3])


@pytest.fixture
def report():
    probs = np.array([[0.7, 0.2, 0.1], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4], [0.5, 0.4, 0.1], [0.2, 0.2, 0.6]])
    return report_from_probabilities(probs, [0, 1, 2, 1, 2], ["neg", "neu", "pos"], variant="fused")


class TestHistoryTable:
    def test_seconds_zeroed_by_default(self, history):
        table = history_table(history)
        assert table.col_names == HISTORY_COLUMNS
        np.testing.assert_array_equal(table.values[:, -1], 0.0)
        np.testing.assert_array_equal(table.values[:, 0], [1, 2, 3])

    def test_seconds_kept_on_request(self, history):
        assert history_table(history, include_timing=True).values[0, -1] == 0.731


class TestExportHistory:
    def test_files(self, tmp_path, history, report):
        written = export_history(history, report, tmp_path)
        names = {p.name for p in written}
        for name in ("history.csv", "loss.svg", "accuracy.svg", "confusion.csv", "confusion.svg", "report.json"):
            assert name in names
        for c in range(3):
            assert f"roc_{c}.csv" in names and f"pr_{c}.csv" in names

        table, _ = load_table(tmp_path / "history.csv")
        assert table.rows == 3
        np.testing.assert_allclose(table.values[:, 3], [1.0, 0.8, 0.85])

        confusion, truth = load_table(tmp_path / "confusion.csv", label_column="true")
        assert confusion.values.sum() == 5
        np.testing.assert_array_equal(truth, [0, 1, 2])

        document = json.loads((tmp_path / "report.json").read_text())
        assert document["variant"] == "fused"
        assert document["training"]["best_epoch"] == 2
        assert document["training"]["lr_reductions"] == [3]

    def test_without_svg(self, tmp_path, history, report):
        written = export_history(history, report, tmp_path, svg=False)
        assert not any(p.suffix == ".svg" for p in written)

    def test_evaluation_only(self, tmp_path, report):
        export_history(None, report, tmp_path, svg=False)
        assert not (tmp_path / "history.csv").exists()
        assert "training" not in json.loads((tmp_path / "report.json").read_text())

    def test_byte_identical_reruns(self, tmp_path, history, report):
        first = export_history(history, report, tmp_path / "a")
        second = export_history(history, report, tmp_path / "b")
        for a, b in zip(first, second):
            assert a.name == b.name
            assert a.read_bytes() == b.read_bytes(), a.name
