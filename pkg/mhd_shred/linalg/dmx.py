"""
`.dmx` dense matrix files.

Layout: 12-byte magic, u32 format version, u64 rows, u64 cols, then the
row-major payload as little-endian float64.
"""

import hashlib
import struct
from pathlib import Path
from typing import Union

import numpy as np

from mhd_shred.errors import CorruptFileError, VersionMismatchError
from mhd_shred.linalg.svd import as_dense

DMX_MAGIC = b"DENSEMATRIX\x00"
DMX_VERSION = 1
_HEADER = struct.Struct("<12sIQQ")


def write_dmx(path: Union[str, Path], matrix) -> Path:
    matrix = as_dense(matrix)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows, cols = matrix.shape
    with open(path, "wb") as f:
        f.write(_HEADER.pack(DMX_MAGIC, DMX_VERSION, rows, cols))
        f.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
    return path


def read_dmx(path: Union[str, Path]) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CorruptFileError(f"{path}: shorter than the {_HEADER.size}-byte header")
    magic, version, rows, cols = _HEADER.unpack_from(raw)
    if magic != DMX_MAGIC:
        raise CorruptFileError(f"{path}: not a .dmx file")
    if version != DMX_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {DMX_VERSION}")
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise CorruptFileError(f"{path}: {len(raw)} bytes, expected {expected} for {rows}x{cols}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size, count=rows * cols)
    return data.reshape(rows, cols).astype(np.float64)


def file_sha256(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
