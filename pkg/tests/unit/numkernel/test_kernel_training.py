"""
Tests for the optimizer and the checkpoint format.
"""

import struct

import numpy as np
import pytest

from udpx.core.config import OptimizerConfig
from udpx.core.exceptions import GradientError, ModelError
from udpx.numkernel.checkpoint import CHECKPOINT_HEADER, load_checkpoint, save_checkpoint
from udpx.numkernel.optim import (
    OptimizerState,
    adam_step,
    decay_lr,
    global_grad_norm,
    zero_grads,
)
from udpx.numkernel.value import Parameter


class TestAdam:
    """Adam updates with global-norm clipping."""

    def test_first_step_moves_by_learning_rate(self):
        w = Parameter([1.0, -1.0], name="w")
        w.grad = np.array([0.5, -2.0])
        state = OptimizerState(learning_rate=0.001)

        adam_step([w], state)

        np.testing.assert_allclose(w.data, [1.0 - 0.001, -1.0 + 0.001], rtol=1e-6)
        assert state.step == 1

    def test_gradients_are_clipped_to_global_norm(self):
        w = Parameter([0.0, 0.0], name="w")
        w.grad = np.array([30.0, 40.0])
        state = OptimizerState(clip_norm=5.0)

        adam_step([w], state)

        assert state.last_grad_norm == pytest.approx(50.0)
        # moments see the clipped gradient [3, 4]
        np.testing.assert_allclose(state.first_moment["w"], [0.3, 0.4])

    def test_small_gradients_are_not_clipped(self):
        w = Parameter([0.0], name="w")
        w.grad = np.array([2.0])
        state = OptimizerState(clip_norm=5.0)

        adam_step([w], state)

        np.testing.assert_allclose(state.first_moment["w"], [0.2])

    def test_non_finite_gradient_aborts_without_update(self):
        good = Parameter([1.0], name="good")
        bad = Parameter([1.0], name="bad")
        good.grad = np.array([1.0])
        bad.grad = np.array([np.nan])
        state = OptimizerState()

        with pytest.raises(GradientError, match="bad"):
            adam_step([good, bad], state)

        np.testing.assert_array_equal(good.data, [1.0])
        assert state.step == 0

    def test_missing_gradient_counts_as_zero(self):
        w = Parameter([1.0], name="w")
        adam_step([w], OptimizerState())
        np.testing.assert_array_equal(w.data, [1.0])

    def test_global_norm_and_zero_grads(self):
        a = Parameter([0.0], name="a")
        b = Parameter([0.0, 0.0], name="b")
        a.grad = np.array([3.0])
        b.grad = np.array([0.0, 4.0])

        assert global_grad_norm([a, b]) == pytest.approx(5.0)
        zero_grads([a, b])
        assert a.grad is None and b.grad is None

    def test_state_from_config(self):
        state = OptimizerState.from_config(OptimizerConfig(learning_rate=0.01, clip_norm=1.0))
        assert state.learning_rate == 0.01
        assert state.clip_norm == 1.0
        assert state.beta2 == 0.9


def test_learning_rate_decay():
    state = OptimizerState(learning_rate=0.001, decay_rate=0.999995)
    decay_lr(state)
    assert state.learning_rate == pytest.approx(0.000999995, rel=1e-12)


class TestCheckpoint:
    """Binary checkpoint layout and validation."""

    def test_round_trip_keeps_arrays_and_meta(self, temp_dir):
        arrays = {
            "parser.arc.U1": np.arange(6.0).reshape(2, 3),
            "encoder.words": np.ones((4, 2), dtype=np.float32),
        }
        path = save_checkpoint(temp_dir / "model.ckpt", arrays, meta={"seed": 3})
        loaded, meta = load_checkpoint(path)

        assert meta == {"seed": 3}
        assert set(loaded) == set(arrays)
        np.testing.assert_array_equal(loaded["parser.arc.U1"], arrays["parser.arc.U1"])
        assert loaded["encoder.words"].dtype == np.float32

    def test_header_and_manifest_length(self, temp_dir):
        path = save_checkpoint(temp_dir / "model.ckpt", {"w": np.zeros(2)})
        raw = path.read_bytes()

        assert raw.startswith(CHECKPOINT_HEADER)
        (length,) = struct.unpack("<Q", raw[len(CHECKPOINT_HEADER) : len(CHECKPOINT_HEADER) + 8])
        assert len(raw) == len(CHECKPOINT_HEADER) + 8 + length + 16

    def test_wrong_header(self, temp_dir):
        path = temp_dir / "model.ckpt"
        path.write_bytes(b"NOT-A-CHECKPOINT")
        with pytest.raises(ModelError, match="not a udpx checkpoint"):
            load_checkpoint(path)

    def test_truncated_data(self, temp_dir):
        path = save_checkpoint(temp_dir / "model.ckpt", {"w": np.zeros(8)})
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(ModelError, match="truncated"):
            load_checkpoint(path)

    def test_corrupt_manifest(self, temp_dir):
        path = temp_dir / "model.ckpt"
        path.write_bytes(CHECKPOINT_HEADER + struct.pack("<Q", 5) + b"{oops")
        with pytest.raises(ModelError, match="manifest"):
            load_checkpoint(path)

    def test_missing_file(self, temp_dir):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(temp_dir / "absent.ckpt")
