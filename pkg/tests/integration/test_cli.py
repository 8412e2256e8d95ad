"""
CLI surface tests: help, version, config inspection and exit codes.
"""

import pytest
from typer.testing import CliRunner

from sentifuse import __version__
from sentifuse.cli.main import app, cli_main


pytestmark = pytest.mark.integration

runner = CliRunner()


def exit_code_of(argv):
    with pytest.raises(SystemExit) as excinfo:
        cli_main(argv)
    return excinfo.value.code


class TestHelp:
    def test_help_lists_commands_and_config_keys(self):
        result = runner.invoke(app, ["--help"])
        assert result.exit_code == 0
        for command in ("synth", "featurize", "prepare", "train", "evaluate", "baseline", "compare", "run"):
            assert command in result.output
        assert "train.early_stop_patience = 5" in result.output
        assert "labels.oversample = True" in result.output

    def test_version(self):
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert result.output.strip() == f"sentifuse {__version__}"


class TestConfigCommands:
    def test_show_defaults(self):
        result = runner.invoke(app, ["config", "show"])
        assert result.exit_code == 0
        assert "gbdt.n_rounds" in result.output

    def test_show_resolved_values(self, write_run_config):
        config = write_run_config("show", "work_show", seed=4242)
        result = runner.invoke(app, ["config", "show", "--config", str(config)])
        assert result.exit_code == 0
        assert "4242" in result.output

    def test_validate(self, write_run_config):
        config = write_run_config("valid", "work_valid")
        result = runner.invoke(app, ["config", "validate", "--config", str(config)])
        assert result.exit_code == 0
        assert "is valid" in result.output

    def test_validate_rejects_unknown_keys(self, tmp_path):
        config = tmp_path / "bad.toml"
        config.write_text("[train]\nepoch = 5\n")
        result = runner.invoke(app, ["config", "validate", "--config", str(config)])
        assert result.exit_code == 1
        assert "error: config validate:" in result.output
        assert "epoch" in result.output


class TestSynthCommand:
    def test_writes_a_corpus(self, tmp_path):
        spec = tmp_path / "synth.toml"
        spec.write_text("counts = [4, 4, 4, 4, 4, 4]\nduration = 0.1\nvideo_dim = 6\n")
        out = tmp_path / "corpus"
        result = runner.invoke(app, ["synth", "--spec", str(spec), "--out", str(out)])
        assert result.exit_code == 0, result.output
        for name in ("text.csv", "audio_manifest.csv", "video.csv", "synth_spec.json", "run.json"):
            assert (out / name).exists()
        assert len(list((out / "clips").glob("*.wav"))) == 24


class TestExitCodes:
    def test_success(self):
        assert exit_code_of(["config", "show"]) == 0

    def test_unknown_option_is_a_usage_error(self, capsys):
        assert exit_code_of(["train", "--bogus"]) == 1
        assert capsys.readouterr().err.startswith("error: ")

    def test_missing_config_file(self, tmp_path, capsys):
        assert exit_code_of(["train", "--config", str(tmp_path / "absent.toml")]) == 1
        assert "config file not found" in capsys.readouterr().err

    def test_unknown_variant(self, write_run_config):
        config = write_run_config("bad_variant", "work_bad", experiment={"variant": "smell"})
        assert exit_code_of(["train", "--config", str(config)]) == 1

    def test_unknown_baseline(self, write_run_config):
        config = write_run_config("baseline", "work_baseline")
        assert exit_code_of(["baseline", "--which", "fused", "--config", str(config)]) == 1

    def test_missing_dataset_is_a_data_error(self, write_run_config, capsys):
        config = write_run_config("unprepared", "work_unprepared")
        assert exit_code_of(["train", "--config", str(config)]) == 2
        assert "sentifuse prepare" in capsys.readouterr().err

    def test_missing_checkpoint(self, write_run_config, tmp_path):
        config = write_run_config("eval_missing", "work_eval_missing")
        argv = ["evaluate", "--config", str(config), "--checkpoint", str(tmp_path / "ckpt_best.bin")]
        assert exit_code_of(argv) == 2

    def test_compare_needs_reports(self, tmp_path):
        assert exit_code_of(["compare", "--runs", str(tmp_path)]) == 2
