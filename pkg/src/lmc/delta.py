"""XOR deltas between consecutive checkpoint buffers.

XOR keeps reconstruction bit-exact without any float edge cases: wherever a
value did not change between steps, the delta byte is zero, and applying the
same delta twice is the identity. Deltas here are always between whole equal-
shape buffers; the pipeline order is delta first, then byte-grouping, then
block coding (XOR and byte-grouping commute, so the order is a convention).
"""

from __future__ import annotations

import numpy as np

from .errors import DtypeMismatchError, ShapeMismatchError
from .types import DeltaBuffer, TensorBuffer


def xor_bytes(a: bytes, b: bytes) -> bytes:
    """Bytewise XOR of two equal-length byte strings."""
    if len(a) != len(b):
        raise ShapeMismatchError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        return b""
    av = np.frombuffer(a, dtype=np.uint8)
    bv = np.frombuffer(b, dtype=np.uint8)
    return np.bitwise_xor(av, bv).tobytes()


def xor_delta(
    prev: TensorBuffer, next_: TensorBuffer, *, step_from: int = 0
) -> DeltaBuffer:
    """Delta between step ``step_from`` and ``step_from + 1``.

    Symmetric in its arguments: xor_delta(a, b) and xor_delta(b, a) hold the
    same bytes.
    """
    if prev.element_type is not next_.element_type:
        raise DtypeMismatchError(
            f"element type mismatch: {prev.element_type.name} vs "
            f"{next_.element_type.name}"
        )
    return DeltaBuffer(
        xor_bytes(prev.data, next_.data),
        prev.element_type,
        step_from,
        step_from + 1,
    )


def xor_apply(prev: TensorBuffer, delta: DeltaBuffer) -> TensorBuffer:
    """Reconstruct the next step: xor_apply(prev, xor_delta(prev, next)) == next."""
    return TensorBuffer(xor_bytes(prev.data, delta.data), prev.element_type)
