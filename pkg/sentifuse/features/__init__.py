"""
Feature Pipelines - Text, audio and video feature construction.
"""

from sentifuse.features.audio import AudioFeaturizer, extract_audio_features
from sentifuse.features.text import TextFeaturizer, normalize_text
from sentifuse.features.video import VideoFeaturizer, interpolate_missing
from sentifuse.features.wav import AudioClip, read_wav, write_wav

__all__ = [
    "AudioClip",
    "read_wav",
    "write_wav",
    "TextFeaturizer",
    "normalize_text",
    "AudioFeaturizer",
    "extract_audio_features",
    "VideoFeaturizer",
    "interpolate_missing",
]
