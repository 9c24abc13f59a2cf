"""Binary checkpoint format: bit-exact round trips and corruption handling."""

import struct

import numpy as np
import pytest

from relbox.tensor import Tensor, load_checkpoint, save_checkpoint
from relbox.tensor.checkpoint import CHECKPOINT_MAGIC, CHECKPOINT_VERSION

rng = np.random.default_rng(31337)


def test_round_trip_is_bit_exact(tmp_path):
    params = {
        "conv/w": rng.normal(size=(2, 2, 3, 12)).astype(np.float32),
        "conv/b": rng.normal(size=12).astype(np.float32),
        "value/w": rng.normal(size=(64, 1)),  # float64
    }
    path = tmp_path / "params.ckpt"
    save_checkpoint(path, params)
    loaded = load_checkpoint(path)
    assert set(loaded) == set(params)
    for name, arr in params.items():
        assert loaded[name].dtype == arr.dtype
        assert loaded[name].tobytes() == arr.tobytes()


def test_accepts_tensors_and_zero_dim(tmp_path):
    params = {
        "t": Tensor(rng.normal(size=(3, 2)).astype(np.float32)),
        "scalar": np.float64(3.125),
    }
    path = tmp_path / "p.ckpt"
    save_checkpoint(path, {"t": params["t"], "scalar": np.asarray(params["scalar"])})
    loaded = load_checkpoint(path)
    assert loaded["t"].tobytes() == params["t"].data.tobytes()
    assert loaded["scalar"].shape == ()
    assert loaded["scalar"] == 3.125


def test_non_contiguous_input(tmp_path):
    base = rng.normal(size=(6, 8)).astype(np.float32)
    view = base[::2, ::2]
    assert not view.flags["C_CONTIGUOUS"]
    path = tmp_path / "v.ckpt"
    save_checkpoint(path, {"v": view})
    np.testing.assert_array_equal(load_checkpoint(path)["v"], view)


def test_bytes_independent_of_insertion_order(tmp_path):
    a = rng.normal(size=4).astype(np.float32)
    b = rng.normal(size=(2, 2)).astype(np.float32)
    p1, p2 = tmp_path / "1.ckpt", tmp_path / "2.ckpt"
    save_checkpoint(p1, {"alpha": a, "beta": b})
    save_checkpoint(p2, {"beta": b, "alpha": a})
    assert p1.read_bytes() == p2.read_bytes()


def test_save_twice_identical_bytes(tmp_path):
    params = {"w": rng.normal(size=(5, 5)).astype(np.float32)}
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(p1, params)
    save_checkpoint(p2, params)
    assert p1.read_bytes() == p2.read_bytes()


def test_empty_params(tmp_path):
    path = tmp_path / "empty.ckpt"
    save_checkpoint(path, {})
    assert load_checkpoint(path) == {}
    assert path.read_bytes() == struct.pack("<4sII", CHECKPOINT_MAGIC, CHECKPOINT_VERSION, 0)


def test_rejects_unsupported_dtype(tmp_path):
    with pytest.raises(ValueError, match="dtype"):
        save_checkpoint(tmp_path / "x.ckpt", {"w": np.zeros(3, dtype=np.int64)})


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 8)
    with pytest.raises(ValueError, match="not a parameter checkpoint"):
        load_checkpoint(path)


def test_rejects_unknown_version(tmp_path):
    path = tmp_path / "v9.ckpt"
    path.write_bytes(struct.pack("<4sII", CHECKPOINT_MAGIC, 9, 0))
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(path)


def test_rejects_trailing_bytes(tmp_path):
    path = tmp_path / "trail.ckpt"
    save_checkpoint(path, {"w": np.zeros(2, dtype=np.float32)})
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(ValueError, match="trailing"):
        load_checkpoint(path)


def test_loaded_arrays_are_native_and_writable(tmp_path):
    path = tmp_path / "w.ckpt"
    save_checkpoint(path, {"w": np.ones(3, dtype=np.float32)})
    arr = load_checkpoint(path)["w"]
    assert arr.dtype == np.dtype("=f4")
    arr[0] = 2.0  # must not be a read-only frombuffer view
