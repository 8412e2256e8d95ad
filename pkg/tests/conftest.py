"""
Shared fixtures for the SentiFuse test suite.
"""

import math

import numpy as np
import pytest

from sentifuse.core.config_schemas import EncoderSpec
from sentifuse.core.models import FeatureMatrix, LabeledDataset
from sentifuse.core.rng import SeededRng
from sentifuse.data.synthgen import SynthSpec
from sentifuse.features.wav import AudioClip
from sentifuse.learn.neural import BranchSpec, ModelSpec
from sentifuse.ui import setup_console


SAMPLE_RATE = 16000


@pytest.fixture(autouse=True)
def plain_consoles():
    """Fresh, colourless consoles so captured output has no escape codes."""
    setup_console(force_terminal=False, width=200)
    yield


@pytest.fixture
def rng():
    return SeededRng(1234)


def tone(frequency: float, seconds: float = 0.5, amplitude: float = 0.5, sample_rate: int = SAMPLE_RATE) -> AudioClip:
    t = np.arange(int(round(seconds * sample_rate))) / sample_rate
    return AudioClip(amplitude * np.sin(2.0 * math.pi * frequency * t), sample_rate)


@pytest.fixture
def make_tone():
    return tone


@pytest.fixture
def tone_440():
    return tone(440.0)


@pytest.fixture
def silence():
    return AudioClip(np.zeros(SAMPLE_RATE // 2), SAMPLE_RATE)


@pytest.fixture
def small_dataset():
    """Twelve rows, three classes, four rows each, with deterministic views."""
    labels = np.repeat([0, 1, 2], 4)
    gen = np.random.default_rng(7)
    text = FeatureMatrix.from_array(gen.normal(size=(12, 3)), "t")
    audio = FeatureMatrix.from_array(gen.normal(size=(12, 2)), "a")
    video = FeatureMatrix.from_array(np.arange(12.0).reshape(12, 1), "v")
    return LabeledDataset(text, audio, video, labels)


@pytest.fixture
def tiny_spec():
    """Two-branch model small enough for finite-difference checks."""
    text = BranchSpec("text", 3, EncoderSpec(widths=[4], dropout=[0.25], batch_norm=[False]))
    video = BranchSpec("video", 2, EncoderSpec(widths=[3], dropout=[0.2], batch_norm=[True]))
    return ModelSpec((text, video), n_classes=3, fusion_width=5, fusion_dropout=0.4)


@pytest.fixture
def small_synth_spec():
    """Small six-class corpus that still splits 80/10/10 cleanly."""
    return SynthSpec(counts=[20] * 6, duration=0.25, video_dim=8, filler_tokens=10, seed=3)
