"""
Tests for diagnostics and exit-code mapping.
"""

import click
import numpy as np
import pytest

from sentifuse.core.exceptions import (
    ConfigurationError,
    DataError,
    ModelStateError,
    NumericError,
    UsageError,
    ValidationError,
)
from sentifuse.ui.error_handler import ErrorHandler


pytestmark = pytest.mark.unit


class TestExitCodes:
    @pytest.mark.parametrize(
        "error, code",
        [
            (ConfigurationError("bad key"), 1),
            (UsageError("conflicting flags"), 1),
            (click.UsageError("no such option"), 1),
            (DataError("missing file"), 2),
            (ValidationError("label 9 outside [0, 6)"), 2),
            (ModelStateError("not fitted"), 2),
            (FileNotFoundError("gone"), 2),
            (NumericError("non-finite loss"), 3),
            (FloatingPointError("overflow"), 3),
            (np.linalg.LinAlgError("Singular matrix"), 3),
            (RuntimeError("surprise"), 1),
        ],
    )
    def test_mapping(self, error, code):
        assert ErrorHandler().exit_code_for(error) == code


class TestDiagnostics:
    def test_single_line_with_context(self, capsys):
        code = ErrorHandler().handle_error(DataError("row 3: expected 4 fields,\n  got 2"), "featurize")
        captured = capsys.readouterr()
        assert code == 2
        assert captured.out == ""
        assert captured.err.strip() == "error: featurize: row 3: expected 4 fields, got 2"

    def test_markup_is_printed_literally(self, capsys):
        ErrorHandler().handle_error(ValidationError("no class has [bold]positives[/bold]"))
        assert "[bold]positives[/bold]" in capsys.readouterr().err

    def test_traceback_in_debug_mode(self, capsys):
        try:
            raise NumericError("non-finite gradient")
        except NumericError as e:
            code = ErrorHandler(show_traceback=True).handle_error(e)
        err = capsys.readouterr().err
        assert code == 3
        assert err.startswith("error: non-finite gradient")
        assert "Traceback" in err
