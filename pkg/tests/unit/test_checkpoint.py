"""
Tests for the binary checkpoint codec.
"""

import numpy as np
import pytest

from sentifuse.core.exceptions import DataError, ModelStateError
from sentifuse.core.rng import SeededRng
from sentifuse.learn.checkpoint import (
    MAGIC,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from sentifuse.learn.neural import ModelSpec, init_model


pytestmark = pytest.mark.unit


@pytest.fixture
def model(tiny_spec):
    model = init_model(tiny_spec, SeededRng(6))
    model.buffers["video.0.running_mean"][...] = [0.5, -1.0, 2.0]
    return model


class TestCheckpoint:
    def test_layout(self, model):
        payload = encode_checkpoint(model)
        assert payload[:4] == MAGIC
        assert len(payload) == 4 + 4 + 32 + 8 * (model.n_parameters + 6)

    def test_roundtrip_is_exact(self, tmp_path, model, tiny_spec):
        path = save_checkpoint(model, tmp_path / "ckpt_best.bin")
        restored = load_checkpoint(path, tiny_spec)
        for (name, a), (_, b) in zip(model.tensors(), restored.tensors()):
            np.testing.assert_array_equal(a, b, err_msg=name)
        assert encode_checkpoint(restored) == path.read_bytes()

    def test_bad_magic(self, model, tiny_spec):
        payload = b"XXXX" + encode_checkpoint(model)[4:]
        with pytest.raises(DataError, match="bad magic"):
            decode_checkpoint(payload, tiny_spec)

    def test_unknown_version(self, model, tiny_spec):
        payload = bytearray(encode_checkpoint(model))
        payload[4] = 9
        with pytest.raises(DataError, match="version"):
            decode_checkpoint(bytes(payload), tiny_spec)

    def test_other_architecture(self, model, tiny_spec):
        other = ModelSpec(tiny_spec.branches, 3, fusion_width=6)
        with pytest.raises(ModelStateError, match="different model spec"):
            decode_checkpoint(encode_checkpoint(model), other)

    def test_truncated_body(self, model, tiny_spec):
        with pytest.raises(ModelStateError, match="bytes"):
            decode_checkpoint(encode_checkpoint(model)[:-8], tiny_spec)

    def test_truncated_header(self, tiny_spec):
        with pytest.raises(DataError, match="truncated"):
            decode_checkpoint(b"MFUS", tiny_spec)

    def test_missing_file(self, tmp_path, tiny_spec):
        with pytest.raises(DataError):
            load_checkpoint(tmp_path / "absent.bin", tiny_spec)
