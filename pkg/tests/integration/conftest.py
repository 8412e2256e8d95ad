"""
Fixtures for end-to-end runs over a small synthetic corpus.
"""

import json
from pathlib import Path

import pytest

from sentifuse.data.synthgen import RUN_CONFIG_NAME, SynthSpec, generate, write_corpus


def small_run_settings() -> dict:
    """Model and feature sizes scaled down so a full run takes seconds."""
    small_encoder = {"widths": [16], "dropout": [0.2], "batch_norm": [False]}
    return {
        "text": {"rfe_keep": 16, "pad_width": 32},
        "gbdt": {"n_rounds": 4, "max_depth": 2, "min_samples_leaf": 2},
        "video": {"n_folds": 3},
        "model": {
            "text": small_encoder,
            "audio": small_encoder,
            "video": {"widths": [16, 8], "dropout": [0.2, 0.2], "batch_norm": [True, True]},
            "early": {"widths": [32], "dropout": [0.3], "batch_norm": [False]},
            "fusion_width": 16,
        },
        "train": {"epochs": 6, "batch_size": 16},
    }


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("corpus")
    spec = SynthSpec(counts=[20] * 6, duration=0.25, video_dim=8, filler_tokens=10, seed=3)
    write_corpus(generate(spec), spec, out)
    return out


@pytest.fixture(scope="session")
def write_run_config(corpus_dir):
    """Write a small run config next to the corpus pointing at ``work_dir``."""

    def write(name: str, work_dir: str, **overrides) -> Path:
        document = json.loads((corpus_dir / RUN_CONFIG_NAME).read_text())
        document.update(small_run_settings())
        document["paths"]["work_dir"] = work_dir
        document.update(overrides)
        path = corpus_dir / f"{name}.json"
        path.write_text(json.dumps(document, indent=2))
        return path

    return write
