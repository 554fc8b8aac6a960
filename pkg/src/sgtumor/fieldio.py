"""Field files.

Binary layout (all integers unsigned 32-bit little-endian)::

    magic     8 bytes   b"SGFIELD\\0"
    marker    4 bytes   0x01020304 written little-endian
    version   4 bytes
    ndim      4 bytes
    dims      ndim x 4 bytes
    data      prod(dims) float64, little-endian, row-major

A reader that sees the marker byte-swapped reports an endianness mismatch
rather than returning garbage.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"SGFIELD\0"
MARKER = 0x01020304
VERSION = 1


class FieldFormatError(ValueError):
    pass


def write_field(field: np.ndarray, path) -> None:
    arr = np.ascontiguousarray(field, dtype="<f8")
    header = MAGIC + struct.pack("<III", MARKER, VERSION, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(header + arr.tobytes(order="C"))


def read_field(path, shape=None) -> np.ndarray:
    """Read a field file; ``shape`` (optional) must match the stored dims."""
    raw = Path(path).read_bytes()
    if len(raw) < 20 or raw[:8] != MAGIC:
        raise FieldFormatError(f"{path}: not a field file (bad magic)")
    (marker,) = struct.unpack("<I", raw[8:12])
    if marker != MARKER:
        if marker == int.from_bytes(MARKER.to_bytes(4, "little"), "big"):
            raise FieldFormatError(f"{path}: endianness marker mismatch")
        raise FieldFormatError(f"{path}: corrupt header (marker {marker:#x})")
    version, ndim = struct.unpack("<II", raw[12:20])
    if version != VERSION:
        raise FieldFormatError(f"{path}: unsupported version {version}")
    if ndim > 8 or len(raw) < 20 + 4 * ndim:
        raise FieldFormatError(f"{path}: corrupt header (ndim {ndim})")
    dims = struct.unpack(f"<{ndim}I", raw[20:20 + 4 * ndim])
    body = raw[20 + 4 * ndim:]
    count = int(np.prod(dims)) if ndim else 1
    if len(body) != 8 * count:
        raise FieldFormatError(f"{path}: expected {count} values, found {len(body) // 8}")
    if shape is not None and tuple(shape) != tuple(dims):
        raise FieldFormatError(f"{path}: dimension mismatch {dims} != {tuple(shape)}")
    return np.frombuffer(body, dtype="<f8").reshape(dims).astype(float)


def write_csv(field: np.ndarray, path) -> None:
    """2-D field as CSV with 17 significant digits (lossless for doubles)."""
    arr = np.asarray(field, dtype=float)
    if arr.ndim != 2:
        raise ValueError("CSV export expects a 2-D field")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, arr, fmt="%.17g", delimiter=",")


def read_csv(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
