"""LTT binary tensor files.

Layout: b"LWLT", uint32 LE rank, rank x uint32 LE dims, then the row-major
payload as IEEE-754 little-endian float64.
"""
import logging
import os
from typing import Union

import numpy as np

from .errors import LTTFormatError

MAGIC = b"LWLT"
_HEADER = len(MAGIC) + 4

logger = logging.getLogger(__name__)


def encode(array: np.ndarray) -> bytes:
    array = np.asarray(array, dtype=np.float64)
    header = np.asarray([array.ndim, *array.shape], dtype="<u4")
    return MAGIC + header.tobytes() + np.ascontiguousarray(array, dtype="<f8").tobytes()


def decode(payload: bytes) -> np.ndarray:
    if len(payload) < _HEADER:
        raise LTTFormatError(f"LTT payload truncated: {len(payload)} bytes is shorter than the header")
    if payload[:len(MAGIC)] != MAGIC:
        raise LTTFormatError(f"bad LTT magic {payload[:len(MAGIC)]!r}, expected {MAGIC!r}")
    rank = int(np.frombuffer(payload, dtype="<u4", count=1, offset=len(MAGIC))[0])
    dims_end = _HEADER + 4 * rank
    if len(payload) < dims_end:
        raise LTTFormatError(f"LTT payload truncated inside the dimension list (rank {rank})")
    dims = tuple(int(d) for d in np.frombuffer(payload, dtype="<u4", count=rank, offset=_HEADER))
    if any(d == 0 for d in dims):
        raise LTTFormatError(f"LTT dimensions must be positive, got {dims}")
    count = int(np.prod(dims, dtype=np.int64))
    expected = dims_end + 8 * count
    if len(payload) < expected:
        raise LTTFormatError(f"LTT payload truncated: expected {expected} bytes, got {len(payload)}")
    if len(payload) > expected:
        raise LTTFormatError(f"LTT payload has {len(payload) - expected} trailing bytes")
    data = np.frombuffer(payload, dtype="<f8", count=count, offset=dims_end)
    return data.astype(np.float64).reshape(dims)


def write_tensor(path: Union[str, os.PathLike], array: np.ndarray) -> str:
    """Write a tensor to an LTT file"""
    with open(path, "wb") as f:
        f.write(encode(array))
    logger.debug(f"Wrote LTT tensor {np.shape(array)} to {path}")
    return str(path)


def read_tensor(path: Union[str, os.PathLike]) -> np.ndarray:
    """Read a tensor from an LTT file"""
    with open(path, "rb") as f:
        payload = f.read()
    try:
        return decode(payload)
    except LTTFormatError as e:
        logger.error(f"Failed to read LTT file {path}: {str(e)}")
        raise LTTFormatError(f"{path}: {str(e)}") from e
