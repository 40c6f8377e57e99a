"""Canonical length-limited Huffman coding over byte blocks.

Code lengths come from a standard two-queue Huffman build; when the optimal
tree would exceed the 15-bit length limit (possible only under extreme count
skew) the builder falls back to package-merge, which is optimal among prefix
codes subject to the limit. Only lengths are ever serialized: the canonical
assignment rule (codes handed out in length-ascending, symbol-ascending
order) reconstructs the exact code values on the decode side, so a codebook
is 256 four-bit lengths = 128 bytes on the wire.

Bits are packed MSB-first within bytes; the final byte is zero-padded. Both
the encoder and decoder are vectorized: the encoder repeats each symbol's
left-justified code once per bit and packs the ragged result in one pass,
the decoder resolves the symbol chain with a canonical window table plus
pointer doubling, so neither direction runs a per-symbol interpreter loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .entropy import ByteHistogram
from .errors import (
    CorruptStreamError,
    EmptyInputError,
    MalformedCodebookError,
    MissingSymbolError,
)

MAX_CODE_LENGTH = 15

# Kraft sum is tracked in integer units of 2^-15 so completeness checks are
# exact: a complete code sums to exactly _KRAFT_ONE.
_KRAFT_ONE = 1 << MAX_CODE_LENGTH

# The decoder composes its jump table this many times, decoding 2**n symbols
# per anchor; anchors are walked in the interpreter, everything between them
# is gathered vectorized. Chosen to balance full-array composition passes
# against the per-anchor interpreter cost.
_DECODE_DOUBLINGS = 5


@dataclass(frozen=True)
class BlockCodebook:
    """256 code lengths in bits; 0 marks an absent symbol."""

    lengths: np.ndarray  # shape (256,), uint8

    MAX_LENGTH = MAX_CODE_LENGTH

    @property
    def present(self) -> np.ndarray:
        return np.flatnonzero(self.lengths)

    def kraft_units(self) -> int:
        """Sum of 2^(15 - length) over present symbols."""
        lens = self.lengths[self.lengths > 0].astype(np.int64)
        return int(np.sum(1 << (MAX_CODE_LENGTH - lens)))


@dataclass(frozen=True)
class CanonicalCodes:
    """Per-symbol canonical (code value, length) pairs."""

    codes: np.ndarray  # shape (256,), uint16; valid where lengths > 0
    lengths: np.ndarray  # shape (256,), uint8


class EncodedBits(NamedTuple):
    """MSB-first packed bit string; only the first bit_length bits are real."""

    data: bytes
    bit_length: int


def build_codebook(h: ByteHistogram) -> BlockCodebook:
    """Optimal code lengths for one block, limited to 15 bits.

    A single present symbol gets length 1; otherwise the lengths satisfy the
    Kraft equality and minimize total coded size under the limit.
    """
    if h.total == 0:
        raise EmptyInputError("cannot build a codebook from an empty histogram")
    syms = h.present
    lengths = np.zeros(256, dtype=np.uint8)
    if syms.size == 1:
        lengths[syms[0]] = 1
        return BlockCodebook(lengths)

    counts = h.counts[syms]
    # Deterministic ordering: ascending count, then ascending symbol value.
    order = np.lexsort((syms, counts))
    syms = syms[order]
    counts = counts[order]

    depths = _huffman_depths(counts)
    if depths.max() > MAX_CODE_LENGTH:
        depths = _package_merge(counts, MAX_CODE_LENGTH)
    lengths[syms] = depths
    return BlockCodebook(lengths)


def _huffman_depths(weights: np.ndarray) -> np.ndarray:
    """Leaf depths of a Huffman tree over ascending-sorted weights.

    Two-queue construction: leaves are consumed from the sorted input,
    internal nodes are created in nondecreasing weight order, so both queues
    stay sorted and no heap is needed. Ties prefer leaves, which keeps the
    build deterministic.
    """
    n = len(weights)
    total_nodes = 2 * n - 1
    w = [int(x) for x in weights] + [0] * (n - 1)
    parent = [0] * total_nodes
    leaf_head = 0
    node_head = n
    for nxt in range(n, total_nodes):
        acc = 0
        for _ in range(2):
            if leaf_head < n and (node_head >= nxt or w[leaf_head] <= w[node_head]):
                child = leaf_head
                leaf_head += 1
            else:
                child = node_head
                node_head += 1
            parent[child] = nxt
            acc += w[child]
        w[nxt] = acc
    # Children always have smaller indices than their parent, so one reverse
    # sweep resolves every depth.
    depth = [0] * total_nodes
    for node in range(total_nodes - 2, -1, -1):
        depth[node] = depth[parent[node]] + 1
    return np.asarray(depth[:n], dtype=np.uint8)


def _package_merge(weights: np.ndarray, limit: int) -> np.ndarray:
    """Length-limited optimal code lengths via package-merge.

    ``weights`` must be sorted ascending. Each item carries the leaf indices
    it contains; after limit-1 package/merge rounds, the number of times a
    leaf appears among the smallest 2n-2 items is its code length.
    """
    n = len(weights)
    if n > (1 << limit):
        raise MalformedCodebookError(
            f"{n} symbols cannot fit in {limit}-bit codes"
        )
    leaves = [(int(wt), (i,)) for i, wt in enumerate(weights)]
    items = list(leaves)
    for _ in range(limit - 1):
        packages = [
            (items[k][0] + items[k + 1][0], items[k][1] + items[k + 1][1])
            for k in range(0, len(items) - 1, 2)
        ]
        items = _merge_by_weight(leaves, packages)
    lengths = np.zeros(n, dtype=np.uint8)
    for _, members in items[: 2 * n - 2]:
        for leaf in members:
            lengths[leaf] += 1
    return lengths


def _merge_by_weight(a: list, b: list) -> list:
    """Merge two weight-sorted item lists; ties keep items from ``a`` first."""
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i][0] <= b[j][0]:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return out


def _canonical_order(lengths: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Present symbols and their lengths in canonical (length, symbol) order."""
    syms = np.flatnonzero(lengths)
    lens = lengths[syms]
    order = np.lexsort((syms, lens))
    return syms[order].astype(np.uint8), lens[order].astype(np.uint8)


def _validate_codebook(cb: BlockCodebook) -> None:
    """Reject codebooks that cannot be a prefix code.

    Overfull lengths (Kraft sum > 1) are malformed. Underfull codebooks are
    accepted: build_codebook always emits the Kraft equality for two or more
    symbols, but hand-assembled codebooks may be sparse, and the decoder
    treats their unassigned windows as invalid prefixes.
    """
    lens = np.asarray(cb.lengths)
    if lens.shape != (256,):
        raise MalformedCodebookError("codebook must hold 256 lengths")
    if lens.max(initial=0) > MAX_CODE_LENGTH:
        raise MalformedCodebookError("code length exceeds 15 bits")
    if not lens.any():
        raise MalformedCodebookError("codebook has no symbols")
    units = cb.kraft_units()
    if units > _KRAFT_ONE:
        raise MalformedCodebookError(
            f"Kraft inequality violated (sum 2^-len = {units}/{_KRAFT_ONE})"
        )


def assign_canonical(cb: BlockCodebook) -> CanonicalCodes:
    """Deterministic canonical code values for a codebook's lengths."""
    _validate_codebook(cb)
    lengths = cb.lengths
    syms, lens = _canonical_order(lengths)
    # Canonical ranges tile the left-justified code space contiguously, so
    # each code value is its cumulative Kraft offset shifted back down.
    units = 1 << (MAX_CODE_LENGTH - lens.astype(np.int64))
    starts = np.concatenate(([0], np.cumsum(units)[:-1]))
    code_vals = (starts >> (MAX_CODE_LENGTH - lens.astype(np.int64))).astype(np.uint16)
    codes = np.zeros(256, dtype=np.uint16)
    codes[syms] = code_vals
    return CanonicalCodes(codes, lengths.copy())


def encode_block(block: bytes | np.ndarray, codes: CanonicalCodes) -> EncodedBits:
    """Encode every byte of ``block`` with its canonical code."""
    arr = (
        np.frombuffer(block, dtype=np.uint8)
        if isinstance(block, (bytes, bytearray, memoryview))
        else block
    )
    if arr.size == 0:
        return EncodedBits(b"", 0)
    lens = codes.lengths[arr]
    if not lens.all():
        missing = int(arr[lens == 0][0])
        raise MissingSymbolError(f"byte 0x{missing:02x} has no code")

    # Ragged expansion: repeat each left-justified code once per bit of its
    # length, then shift every copy down by its within-code bit index. Work
    # is proportional to the number of output bits, not to 15 per symbol.
    left = (codes.codes[arr] << (MAX_CODE_LENGTH - lens)).astype(np.uint16)
    lens32 = lens.astype(np.int32)
    total = int(lens32.sum())
    starts = np.zeros(arr.size, dtype=np.int32)
    np.cumsum(lens32[:-1], out=starts[1:])
    bit_index = np.arange(total, dtype=np.int32) - np.repeat(starts, lens32)
    expanded = np.repeat(left, lens32)
    bits = (
        (expanded >> (MAX_CODE_LENGTH - 1 - bit_index).astype(np.uint16)) & 1
    ).astype(np.uint8)
    return EncodedBits(np.packbits(bits).tobytes(), total)


def decode_block(
    data: bytes, bit_length: int, cb: BlockCodebook, out_len: int
) -> bytes:
    """Decode ``out_len`` symbols; exact inverse of :func:`encode_block`.

    Requires the bit stream to hold exactly ``bit_length`` real bits and to
    decode to exactly ``out_len`` symbols with no bits left over.

    The symbol chain (position -> position + code length) is resolved with
    pointer doubling so only anchors every `chunk` symbols are walked in the
    interpreter. Corruption is funneled into a single end-position check: an
    invalid prefix gets a sentinel length of 255 and the positions past the
    stream end form a +1 drift zone, so any chain that overruns, underruns
    or hits an unassigned window provably finishes above ``bit_length``.
    """
    if out_len == 0:
        return b""
    if bit_length > len(data) * 8 or bit_length <= 0:
        raise CorruptStreamError(
            f"bit length {bit_length} does not fit payload of {len(data)} bytes"
        )
    try:
        _validate_codebook(cb)
    except MalformedCodebookError as exc:
        raise CorruptStreamError(str(exc)) from exc

    packed_table = _packed_window_table(cb)

    nbytes = (bit_length + 7) // 8
    raw = np.frombuffer(data, dtype=np.uint8, count=nbytes)
    padded = np.zeros(nbytes + 2, dtype=np.uint8)
    padded[:nbytes] = raw
    b3 = (
        (padded[:-2].astype(np.uint32) << 16)
        | (padded[1:-1].astype(np.uint32) << 8)
        | padded[2:].astype(np.uint32)
    )
    # 15-bit big-endian window starting at every bit position, built with
    # eight strided slices instead of a per-bit gather.
    windows = np.empty(bit_length, dtype=np.uint16)
    for r in range(8):
        shifted = ((b3 << np.uint32(r)) >> np.uint32(9)) & np.uint32(0x7FFF)
        view = windows[r::8]
        view[:] = shifted[: view.size].astype(np.uint16)

    packed = packed_table[windows]
    landing = (packed >> 8).astype(np.int32)
    landing += np.arange(bit_length, dtype=np.int32)

    top = bit_length + 256
    if cb.kraft_units() < _KRAFT_ONE:
        # Incomplete code: unassigned windows carry the 255 sentinel, whose
        # landing could fall back inside the valid range; pin it to the cap
        # so invalid prefixes always derail.
        landing[packed >= (255 << 8)] = top
    jump = np.empty(top + 1, dtype=np.int32)
    jump[:bit_length] = landing
    jump[bit_length:top] = np.arange(bit_length + 1, top + 1, dtype=np.int32)
    jump[top] = top
    syms = np.zeros(top + 1, dtype=np.uint8)
    syms[:bit_length] = packed.astype(np.uint8)

    doublings = min(_DECODE_DOUBLINGS, max(1, out_len.bit_length() - 1))
    chunk = 1 << doublings
    hops = jump
    for _ in range(doublings):
        hops = np.take(hops, hops)

    n_anchors = (out_len + chunk - 1) // chunk
    anchors = np.empty(n_anchors, dtype=np.int32)
    a = 0
    for i in range(n_anchors):
        anchors[i] = a
        a = hops[a]

    out = np.empty((chunk, n_anchors), dtype=np.uint8)
    cur = anchors.copy()
    for j in range(chunk):
        out[j] = syms[cur]
        cur = np.take(jump, cur)

    # Walk the ragged tail of the final row to the exact end position; every
    # corruption mode leaves it != bit_length.
    p = int(anchors[-1])
    for _ in range(out_len - (n_anchors - 1) * chunk):
        p = int(jump[p])
    if p != bit_length:
        raise CorruptStreamError(
            f"block of {out_len} symbols ended at bit {p}, "
            f"expected {bit_length}"
        )
    return out.T.reshape(-1)[:out_len].tobytes()


def _packed_window_table(cb: BlockCodebook) -> np.ndarray:
    """15-bit window lookup: window -> (code length << 8) | symbol.

    Canonical codes tile the window space contiguously in canonical order,
    so the table is a single repeat. Windows past an incomplete code's range
    get the 255 sentinel length, which the decoder turns into a derailment.
    """
    syms, lens = _canonical_order(cb.lengths)
    reps = 1 << (MAX_CODE_LENGTH - lens.astype(np.int32))
    filled = int(reps.sum())
    table = np.full(1 << MAX_CODE_LENGTH, 255 << 8, dtype=np.uint16)
    table[:filled] = np.repeat(
        (lens.astype(np.uint16) << 8) | syms.astype(np.uint16), reps
    )
    return table


def cost_bits(cb: BlockCodebook, h: ByteHistogram) -> int:
    """Total coded size of a histogram's block under a codebook, in bits."""
    return int(np.dot(cb.lengths.astype(np.int64), h.counts))


def pack_codebook(cb: BlockCodebook) -> bytes:
    """Wire form: 256 lengths, 4 bits each, low nibble = even symbol."""
    lens = cb.lengths
    return (lens[0::2] | (lens[1::2] << 4)).astype(np.uint8).tobytes()


CODEBOOK_WIRE_SIZE = 128


def unpack_codebook(data: bytes) -> BlockCodebook:
    """Parse and validate the 128-byte wire form."""
    if len(data) != CODEBOOK_WIRE_SIZE:
        raise MalformedCodebookError(
            f"codebook wire form must be {CODEBOOK_WIRE_SIZE} bytes, got {len(data)}"
        )
    packed = np.frombuffer(data, dtype=np.uint8)
    lengths = np.empty(256, dtype=np.uint8)
    lengths[0::2] = packed & 0x0F
    lengths[1::2] = packed >> 4
    cb = BlockCodebook(lengths)
    _validate_codebook(cb)
    return cb
