"""Byte-grouping: regroup element bytes by significance position.

A width-w buffer of n elements is a pure permutation away from w contiguous
groups of n bytes each, where group g collects byte g of every element.
Grouping puts bytes with similar statistics (e.g. bf16 exponent bytes) next
to each other, which is what makes the downstream block coder effective.
"""

from __future__ import annotations

import numpy as np

from .errors import AlignmentError
from .types import GroupedBuffer, TensorBuffer


def byte_group(buf: TensorBuffer) -> GroupedBuffer:
    """Rearrange ``buf`` into contiguous per-significance byte groups.

    Length-preserving and bijective; RAW8 input is returned unchanged.
    """
    width = buf.element_type.width
    n = buf.element_count
    if width == 1 or n == 0:
        return GroupedBuffer(buf.data, buf.element_type, n)
    grouped = group_bytes(buf.data, width)
    return GroupedBuffer(grouped, buf.element_type, n)


def byte_ungroup(buf: GroupedBuffer) -> TensorBuffer:
    """Exact inverse of :func:`byte_group`."""
    width = buf.element_type.width
    if width == 1 or buf.element_count == 0:
        return TensorBuffer(buf.data, buf.element_type)
    raw = ungroup_bytes(buf.data, width)
    return TensorBuffer(raw, buf.element_type)


def group_bytes(data: bytes, width: int) -> bytes:
    """Group raw bytes of ``width``-byte elements (low-level helper)."""
    if width == 1 or not data:
        return bytes(data)
    if len(data) % width != 0:
        raise AlignmentError(
            f"{len(data)} bytes is not a multiple of element width {width}"
        )
    arr = np.frombuffer(data, dtype=np.uint8)
    # Row = element, column = byte index within the element; transposing puts
    # each byte position into one contiguous run.
    return np.ascontiguousarray(arr.reshape(-1, width).T).tobytes()


def ungroup_bytes(data: bytes, width: int) -> bytes:
    """Inverse of :func:`group_bytes`."""
    if width == 1 or not data:
        return bytes(data)
    if len(data) % width != 0:
        raise AlignmentError(
            f"{len(data)} bytes is not a multiple of element width {width}"
        )
    arr = np.frombuffer(data, dtype=np.uint8)
    return np.ascontiguousarray(arr.reshape(width, -1).T).tobytes()
