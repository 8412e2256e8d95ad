"""
Synth Command - Write a synthetic multimodal corpus.
"""

from pathlib import Path
from typing import Optional

import typer

from sentifuse.cli.context import reported_errors
from sentifuse.data.synthgen import generate, load_synth_spec, write_corpus
from sentifuse.ui import display_info, display_success, status_spinner


def synth_command(
    spec: Optional[Path] = typer.Option(
        None,
        "--spec",
        help="Corpus spec (TOML or JSON); the default six-class corpus when omitted",
        dir_okay=False,
    ),
    out: Path = typer.Option(..., "--out", "-o", help="Directory receiving the corpus", file_okay=False),
) -> None:
    """
    Generate a synthetic corpus in the ingest formats.

    Writes text.csv, audio_manifest.csv with WAV clips, video.csv, the
    spec it was drawn from and a ready-to-run run.json.
    """
    with reported_errors("synth"):
        corpus_spec = load_synth_spec(spec)
        with status_spinner(f"Generating {corpus_spec.total} utterances..."):
            corpus = generate(corpus_spec)
            paths = write_corpus(corpus, corpus_spec, out)
        display_success(f"Synthetic corpus written to {out}")
        display_info(f"Run configuration: {paths['run']}")


__all__ = ["synth_command"]
