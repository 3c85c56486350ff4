"""Bit-exact binary tensor container.

Layout (all integers little-endian):

    magic   4 bytes  b"LXSB"
    version u32      1
    dtype   u8       0 = float32, 1 = float64
    rank    u8
    dims    rank x u64
    payload row-major values, little-endian

The payload length must equal element-size * product(dims) exactly;
write -> read round-trips are bit-exact for both dtypes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    TensorFileError,
    TruncatedPayloadError,
    VersionMismatchError,
)
from .numerics import check_finite

MAGIC = b"LXSB"
VERSION = 1
SUFFIX = ".lxsb"

_DTYPE_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}
_CODE_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}


def write_tensor(path: str | Path, matrix: np.ndarray, dtype=None) -> None:
    """Write ``matrix`` to ``path`` in the container format.

    The on-disk dtype is inferred from the array (float32 or float64) unless
    ``dtype`` overrides it. Non-finite values are rejected.
    """
    arr = np.asarray(matrix)
    if dtype is not None:
        arr = arr.astype(dtype)
    if arr.dtype not in (np.float32, np.float64):
        if not np.issubdtype(arr.dtype, np.floating):
            raise TensorFileError(f"unsupported dtype {arr.dtype}; expected float32/float64")
        arr = arr.astype(np.float32)
    check_finite(arr, "tensor payload")
    arr = np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))
    header = MAGIC + struct.pack("<I", VERSION)
    header += struct.pack("<BB", _DTYPE_CODES[arr.dtype], arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes(order="C"))


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a tensor written by :func:`write_tensor`, validating the format."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagicError(f"{path}: bad magic {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 10:
        raise TruncatedPayloadError(f"{path}: header truncated at {len(data)} bytes")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise VersionMismatchError(f"{path}: version {version}, expected {VERSION}")
    code, rank = struct.unpack_from("<BB", data, 8)
    if code not in _CODE_DTYPES:
        raise TensorFileError(f"{path}: unknown dtype code {code}")
    dims_end = 10 + 8 * rank
    if len(data) < dims_end:
        raise TruncatedPayloadError(f"{path}: dims truncated at {len(data)} bytes")
    dims = struct.unpack_from(f"<{rank}Q", data, 10)
    dtype = _CODE_DTYPES[code]
    expected = dtype.itemsize
    for d in dims:
        expected *= d
    payload = data[dims_end:]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload {len(payload)} bytes, dims imply {expected}")
    if len(payload) > expected:
        raise TensorFileError(
            f"{path}: {len(payload) - expected} trailing bytes after payload")
    arr = np.frombuffer(payload, dtype=dtype).reshape(dims)
    return arr.astype(dtype.newbyteorder("="), copy=True)
