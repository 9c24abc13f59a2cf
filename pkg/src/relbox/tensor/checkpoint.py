"""Versioned binary parameter checkpoints.

Layout (all little-endian): magic "RBCK", u32 version, u32 entry count;
then per entry: u16 name length, UTF-8 name, u8 dtype code (0 = float32,
1 = float64), u8 ndim, u32 per dim, then the raw C-order buffer. Entries
are sorted by name so identical parameter sets write identical bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import Tensor

CHECKPOINT_MAGIC = b"RBCK"
CHECKPOINT_VERSION = 1

_DTYPE_CODES = {np.dtype("float32"): 0, np.dtype("float64"): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def save_checkpoint(path, params: dict) -> None:
    """`params` maps names to Tensors or numpy arrays."""
    chunks = [struct.pack("<4sII", CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(params))]
    for name in sorted(params):
        data = params[name].data if isinstance(params[name], Tensor) else params[name]
        data = np.asarray(data, order="C")  # C-layout copy only if needed; keeps 0-d
        if data.dtype not in _DTYPE_CODES:
            raise ValueError(f"{name}: unsupported dtype {data.dtype}")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", _DTYPE_CODES[data.dtype], data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.astype(_CODE_DTYPES[_DTYPE_CODES[data.dtype]], copy=False).tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    blob = Path(path).read_bytes()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a parameter checkpoint")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    params: dict[str, np.ndarray] = {}
    offset = 12
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        code, ndim = struct.unpack_from("<BB", blob, offset)
        offset += 2
        shape = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        dtype = _CODE_DTYPES[code]
        nbytes = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if ndim else dtype.itemsize
        data = np.frombuffer(blob[offset : offset + nbytes], dtype=dtype).reshape(shape)
        offset += nbytes
        params[name] = data.astype(dtype.newbyteorder("="), copy=True)
    if offset != len(blob):
        raise ValueError(f"{path}: {len(blob) - offset} trailing bytes")
    return params
