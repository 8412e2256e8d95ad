"""
Tests for the synthetic corpus generator.
"""

import json
from collections import Counter

import numpy as np
import pytest

from sentifuse.core.config_schemas import DEFAULT_LABEL_MAP
from sentifuse.core.exceptions import ConfigurationError
from sentifuse.core.tables import load_table, read_manifest
from sentifuse.data.synthgen import (
    SynthSpec,
    generate,
    load_synth_spec,
    scaled_target_counts,
    video_offsets,
    write_corpus,
)
from sentifuse.features.wav import read_wav


pytestmark = pytest.mark.unit


class TestSynthSpec:
    def test_counts_must_match_classes(self):
        with pytest.raises(ValueError):
            SynthSpec(counts=[10, 10])

    def test_load_from_toml(self, tmp_path):
        path = tmp_path / "synth.toml"
        path.write_text("counts = [4, 4, 4, 4, 4, 4]\nseed = 9\n")
        spec = load_synth_spec(path)
        assert spec.total == 24 and spec.seed == 9

    def test_invalid_file(self, tmp_path):
        path = tmp_path / "synth.json"
        path.write_text(json.dumps({"duration": -1}))
        with pytest.raises(ConfigurationError, match="duration"):
            load_synth_spec(path)

    def test_video_offsets_are_equidistant(self):
        offsets = video_offsets(SynthSpec(degrade=False, separation=2.0))
        distances = {round(float(np.linalg.norm(a - b)), 9) for i, a in enumerate(offsets) for b in offsets[i + 1 :]}
        assert distances == {2.0}


class TestGenerate:
    def test_exact_class_counts(self, small_synth_spec):
        corpus = generate(small_synth_spec)
        assert corpus.rows == 120
        assert Counter(corpus.labels.tolist()) == {c: 20 for c in range(6)}

    def test_deterministic(self, small_synth_spec):
        a, b = generate(small_synth_spec), generate(small_synth_spec)
        assert a.transcripts == b.transcripts
        np.testing.assert_array_equal(a.video.values, b.video.values)
        for x, y in zip(a.clips, b.clips):
            np.testing.assert_array_equal(x.samples, y.samples)

    def test_seed_changes_the_corpus(self, small_synth_spec):
        other = small_synth_spec.model_copy(update={"seed": 4})
        assert generate(small_synth_spec).transcripts != generate(other).transcripts

    def test_source_labels_map_back(self, small_synth_spec):
        corpus = generate(small_synth_spec)
        for source, target in zip(corpus.source_labels, corpus.labels):
            assert DEFAULT_LABEL_MAP[int(source)] == int(target)

    def test_text_is_blind_to_the_first_pair(self, small_synth_spec):
        corpus = generate(small_synth_spec)
        themes = {int(label): set() for label in corpus.labels}
        for transcript, label in zip(corpus.transcripts, corpus.labels):
            themes[int(label)].update(w[:4] for w in transcript.split() if w.startswith("tok"))
        assert themes[0] == themes[1] == {"tok0"}
        assert themes[2] == {"tok2"}

    def test_missing_video_entries(self, small_synth_spec):
        corpus = generate(small_synth_spec.model_copy(update={"missing_rate": 0.3}))
        share = np.isnan(corpus.video.values).mean()
        assert 0.2 < share < 0.4


class TestWriteCorpus:
    def test_files(self, tmp_path, small_synth_spec):
        corpus = generate(small_synth_spec)
        paths = write_corpus(corpus, small_synth_spec, tmp_path)
        assert set(paths) == {"text", "audio", "video", "spec", "run"}

        rows = read_manifest(paths["audio"], ["clip_path", "label"])
        assert len(rows) == 120
        clip = read_wav(tmp_path / rows[0]["clip_path"])
        assert clip.sample_rate == 16000 and clip.samples.shape[0] == 4000

        video, labels = load_table(paths["video"], label_column="label", allow_missing=True)
        assert (video.rows, video.cols) == (120, 8)
        np.testing.assert_array_equal(labels, corpus.source_labels)

        run = json.loads(paths["run"].read_text())
        assert run["paths"]["video_table"] == "video.csv"
        assert set(run["labels"]["target_counts"]) == {str(c) for c in range(6)}

    def test_scaled_targets_keep_the_default_proportions(self, small_synth_spec):
        targets = scaled_target_counts(small_synth_spec)
        assert min(targets.values()) == 16
        assert targets[2] > targets[5] > targets[0] == targets[1]
