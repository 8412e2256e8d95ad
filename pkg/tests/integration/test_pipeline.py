"""
End-to-end runs over a small synthetic corpus.
"""

import json

import pytest
from typer.testing import CliRunner

from sentifuse.cli.main import app
from sentifuse.cli.pipeline import featurize, load_dataset, prepare
from sentifuse.core.config_manager import ConfigManager
from sentifuse.core.tables import load_table


pytestmark = [pytest.mark.integration, pytest.mark.slow]

runner = CliRunner()

RUN_FILES = ("config.json", "seed.txt", "model.json", "ckpt_best.bin", "history.csv", "report.json", "confusion.csv")


def invoke(*argv):
    result = runner.invoke(app, list(argv))
    assert result.exit_code == 0, result.output
    return result


@pytest.fixture(scope="module")
def finished_run(write_run_config):
    """One full `run` plus the text baseline in the same work directory."""
    config = write_run_config("e2e", "work_e2e")
    invoke("run", "--config", str(config))
    invoke("baseline", "--which", "text", "--config", str(config))
    return config, config.parent / "work_e2e"


class TestStagedPipeline:
    def test_prepare_keeps_held_out_rows_untouched(self, write_run_config):
        manager = ConfigManager(write_run_config("staged", "work_staged"))
        featurize(manager, "all")
        prepared = prepare(manager)

        features, _ = load_table(manager.work_dir / "features" / "text.csv", label_column="label")
        assert features.rows == 120
        enriched = prepared["enriched"]
        assert enriched.split("test").rows == 12
        assert enriched.split("val").rows == 12
        assert enriched.split("train").rows > 96
        assert enriched.text.cols == 32

        reloaded = load_dataset(manager.work_dir, "plain")
        assert reloaded.rows == prepared["plain"].rows

    def test_plain_and_enriched_views_differ(self, write_run_config):
        manager = ConfigManager(write_run_config("views", "work_views"))
        featurize(manager, "video")
        video, _ = load_table(manager.work_dir / "features" / "video.csv", label_column="label")
        plain, _ = load_table(manager.work_dir / "features" / "video_plain.csv", label_column="label")
        assert video.cols == plain.cols + 6


class TestRunCommand:
    def test_run_directory(self, finished_run):
        _, work = finished_run
        run_dir = work / "runs" / "fused"
        for name in RUN_FILES:
            assert (run_dir / name).exists(), name
        assert (run_dir / "seed.txt").read_text() == "3\n"

        report = json.loads((run_dir / "report.json").read_text())
        assert report["variant"] == "fused"
        assert report["n_samples"] == 12
        assert 0.0 <= report["accuracy"] <= 1.0
        assert len(report["per_class"]) == 6

        history, _ = load_table(run_dir / "history.csv")
        assert history.rows == report["training"]["epochs"]

    def test_evaluate_reproduces_the_run_report(self, finished_run, tmp_path):
        config, work = finished_run
        run_dir = work / "runs" / "fused"
        invoke("evaluate", "--config", str(config), "--checkpoint", str(run_dir / "ckpt_best.bin"), "--out", str(tmp_path))
        trained = json.loads((run_dir / "report.json").read_text())
        evaluated = json.loads((tmp_path / "report.json").read_text())
        trained.pop("training")
        assert evaluated == trained

    def test_compare(self, finished_run, tmp_path):
        _, work = finished_run
        out = tmp_path / "comparison.md"
        result = invoke("compare", "--runs", str(work / "runs" / "fused"), "--runs", str(work / "runs" / "text"), "--out", str(out))
        table = out.read_text()
        assert table.startswith("| rank | run | variant |")
        assert "| fused |" in table and "| text |" in table
        assert "| 1 |" in result.output


class TestReproducibility:
    def test_same_seed_gives_identical_files(self, finished_run, write_run_config):
        _, work = finished_run
        again = write_run_config("again", "work_again")
        invoke("run", "--config", str(again))
        first = work / "runs" / "fused"
        second = again.parent / "work_again" / "runs" / "fused"
        for name in ("history.csv", "report.json", "ckpt_best.bin", "confusion.csv", "roc_0.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_seed_changes_the_run(self, finished_run, write_run_config):
        _, work = finished_run
        other = write_run_config("other_seed", "work_other", seed=11)
        invoke("run", "--config", str(other))
        second = other.parent / "work_other" / "runs" / "fused"
        assert (work / "runs" / "fused" / "ckpt_best.bin").read_bytes() != (second / "ckpt_best.bin").read_bytes()
