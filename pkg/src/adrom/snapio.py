"""Bit-exact snapshot file format and atomic output helpers.

Snapshot files carry one dense matrix: 8 ASCII magic bytes ``ROMSNAP1``,
rows and cols as unsigned 64-bit little-endian integers, then rows*cols
IEEE-754 binary64 little-endian values in column-major order. Writes go
through a temp file in the target directory followed by an atomic rename.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"ROMSNAP1"


def write_matrix(path, matrix) -> None:
    """Write a matrix as a snapshot file (atomic, bit-exact round trip)."""
    M = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
    if M.ndim != 2:
        raise ValueError(f"snapshot matrices must be 2-d, got ndim={M.ndim}")
    rows, cols = M.shape
    payload = MAGIC + struct.pack("<QQ", rows, cols) + M.flatten(order="F").astype("<f8").tobytes()
    _atomic_write_bytes(path, payload)


def read_matrix(path) -> np.ndarray:
    """Read a snapshot file written by write_matrix."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 16:
        raise ValueError(f"{path}: truncated snapshot file")
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: bad magic, not a snapshot file")
    rows, cols = struct.unpack("<QQ", data[len(MAGIC) : len(MAGIC) + 16])
    expected = len(MAGIC) + 16 + rows * cols * 8
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for a {rows}x{cols} matrix, got {len(data)}")
    values = np.frombuffer(data, dtype="<f8", offset=len(MAGIC) + 16)
    return values.reshape((rows, cols), order="F").astype(np.float64)


def write_text(path, text: str) -> None:
    """Atomically write a text file (UTF-8, exact bytes)."""
    _atomic_write_bytes(path, text.encode("utf-8"))


def _atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
