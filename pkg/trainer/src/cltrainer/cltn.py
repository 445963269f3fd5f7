"""Reader/writer for the CLTN tensor container the evaluator consumes.

Wire format (little-endian): magic "CLTN", u8 version=1, u8 dtype=1 (f32),
u16 rank, rank x u32 dims, then the row-major f32 payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CLTN"
VERSION = 1
DTYPE_F32 = 1
MAX_RANK = 8


def write_tensor(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr, dtype=np.float32)
    if not 1 <= arr.ndim <= MAX_RANK:
        raise ValueError(f"rank must be in [1, {MAX_RANK}], got {arr.ndim}")
    header = struct.pack("<4sBBH", MAGIC, VERSION, DTYPE_F32, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + dims + arr.astype("<f4", copy=False).tobytes(order="C")


def read_tensor(data: bytes) -> np.ndarray:
    if data[:4] != MAGIC:
        raise ValueError("bad magic")
    version, dtype, rank = struct.unpack_from("<BBH", data, 4)
    if version != VERSION or dtype != DTYPE_F32:
        raise ValueError(f"unsupported version/dtype {version}/{dtype}")
    dims = struct.unpack_from(f"<{rank}I", data, 8)
    count = int(np.prod(dims, dtype=np.int64)) if rank else 0
    return np.frombuffer(data, dtype="<f4", count=count, offset=8 + 4 * rank).reshape(dims)


def save_tensor(path: Path | str, arr: np.ndarray) -> None:
    Path(path).write_bytes(write_tensor(arr))


def load_tensor(path: Path | str) -> np.ndarray:
    return read_tensor(Path(path).read_bytes())
