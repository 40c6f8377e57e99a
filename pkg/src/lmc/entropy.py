"""Per-block byte histograms and Shannon entropy.

The compressibility model treats bytes as independent symbols: a block's
entropy H = -sum(p_i * log2(p_i)) is the minimum average bits per byte any
symbol-independent coder can reach on it, and summing H over blocks gives the
ideal size an adaptive block coder could approach. The same histogram feeds
the Huffman codebook builder, so the estimate and the codec stay consistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ConfigError, EmptyInputError

# Block size default and bounds. 64 KiB balances adaptivity against the
# 132-byte per-block codebook overhead; the bounds keep the stream header's
# u32 block length and the mode-selection arithmetic comfortable.
DEFAULT_BLOCK_SIZE = 64 * 1024
MIN_BLOCK_SIZE = 4 * 1024
MAX_BLOCK_SIZE = 1024 * 1024


def validate_block_size(block_size: int) -> int:
    if (
        block_size < MIN_BLOCK_SIZE
        or block_size > MAX_BLOCK_SIZE
        or block_size & (block_size - 1) != 0
    ):
        raise ConfigError(
            f"block size must be a power of two in "
            f"[{MIN_BLOCK_SIZE}, {MAX_BLOCK_SIZE}], got {block_size}"
        )
    return block_size


@dataclass(frozen=True)
class ByteHistogram:
    """Occurrence counts for the 256 byte values of one block."""

    counts: np.ndarray  # shape (256,), int64
    total: int

    @property
    def present(self) -> np.ndarray:
        """Byte values with nonzero count, ascending."""
        return np.flatnonzero(self.counts)


def histogram(block: bytes | np.ndarray) -> ByteHistogram:
    """Exact byte-value histogram of ``block``."""
    arr = np.frombuffer(block, dtype=np.uint8) if isinstance(block, (bytes, bytearray, memoryview)) else block
    if arr.size == 0:
        raise EmptyInputError("cannot histogram an empty block")
    counts = np.bincount(arr, minlength=256).astype(np.int64)
    return ByteHistogram(counts, int(arr.size))


def entropy(h: ByteHistogram) -> float:
    """Shannon entropy of the block's byte distribution, in bits per byte.

    Zero-count symbols contribute nothing; the result lies in [0, 8].
    """
    if h.total == 0:
        raise EmptyInputError("histogram is empty")
    p = h.counts[h.counts > 0] / h.total
    return float(-np.sum(p * np.log2(p)))


def block_entropy(block: bytes | np.ndarray) -> float:
    """Convenience: entropy of a raw block."""
    return entropy(histogram(block))


def iter_blocks(data: bytes, block_size: int) -> Iterator[bytes]:
    """Consecutive ``block_size`` slices of ``data``; the last may be short."""
    for off in range(0, len(data), block_size):
        yield data[off : off + block_size]


def estimate_file_entropy_ratio(
    data: bytes, block_size: int = DEFAULT_BLOCK_SIZE
) -> float:
    """Ideal compressed/original ratio if each block's bytes cost exactly H bits.

    Each block's probabilities use that block's own length as denominator,
    including a short final block.
    """
    if block_size <= 0:
        raise ConfigError(f"block size must be positive, got {block_size}")
    if len(data) == 0:
        raise EmptyInputError("cannot estimate entropy of empty data")
    arr = np.frombuffer(data, dtype=np.uint8)
    total_bits = 0.0
    for off in range(0, arr.size, block_size):
        block = arr[off : off + block_size]
        total_bits += block_entropy(block) * block.size
    return (total_bits / 8.0) / len(data)
