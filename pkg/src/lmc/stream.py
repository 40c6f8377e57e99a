"""The LMC codestream: block records, segment framing, header, checksum.

Layout (all integers little-endian):

    header   : magic "LMC1" | version u8 | flags u8 | element_type u8 |
               reserved u8 | original_length u64 | block_size u32 |
               segment_count u32 | crc32 u32
    body     : zero or more windows, each:
                 segment table: segment_count x (original u64, compressed u64)
                 segment payloads, in order
    segment  : concatenated block records
    record   : mode u8 | original_block_length u32 | payload
               mode 0 Huffman: 128-byte codebook | payload bit count u32 | bits
               mode 1 RLE    : repeated symbol, one byte
               mode 2 stored : raw block bytes

Windows are buffer-size slices of the input; byte-grouping (flag bit 0) is
applied per window before segmentation, and segment boundaries are aligned
to whole blocks so records never straddle a segment. The crc32 (IEEE
polynomial) covers the original uncompressed payload. Every block is encoded
with the cheapest of the three modes, ties going to the lowest mode number;
RLE is only legal for a block holding a single repeated byte value. The
resulting stream depends only on the input and the options, never on how
many workers produced it.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .bytegroup import group_bytes, ungroup_bytes
from .entropy import (
    DEFAULT_BLOCK_SIZE,
    histogram,
    validate_block_size,
)
from .errors import (
    ConfigError,
    CorruptStreamError,
    IntegrityError,
    MalformedCodebookError,
    UnsupportedFormatError,
)
from .huffman import (
    CODEBOOK_WIRE_SIZE,
    assign_canonical,
    build_codebook,
    cost_bits,
    decode_block,
    encode_block,
    pack_codebook,
    unpack_codebook,
)
from .types import DeltaBuffer, ElementType, TensorBuffer

MAGIC = b"LMC1"
VERSION = 1

FLAG_BYTE_GROUPED = 0x01
FLAG_DELTA = 0x02

DEFAULT_BUFFER_SIZE = 128 * 1024 * 1024

MODE_HUFFMAN = 0
MODE_RLE = 1
MODE_STORED = 2

_HEADER = struct.Struct("<4sBBBBQIII")
_RECORD_HEADER = struct.Struct("<BI")
_SEGMENT_ENTRY = struct.Struct("<QQ")
_BITCOUNT = struct.Struct("<I")

HEADER_SIZE = _HEADER.size  # 28

# Serialized payload overhead of a Huffman record beyond its packed bits.
_HUFFMAN_OVERHEAD = CODEBOOK_WIRE_SIZE + _BITCOUNT.size


@dataclass(frozen=True)
class CodeStreamHeader:
    flags: int
    element_type: ElementType
    original_length: int
    block_size: int
    segment_count: int
    crc32: int

    @property
    def byte_grouped(self) -> bool:
        return bool(self.flags & FLAG_BYTE_GROUPED)

    @property
    def delta_applied(self) -> bool:
        return bool(self.flags & FLAG_DELTA)

    def pack(self) -> bytes:
        return _HEADER.pack(
            MAGIC,
            VERSION,
            self.flags,
            self.element_type.code,
            0,
            self.original_length,
            self.block_size,
            self.segment_count,
            self.crc32,
        )


def parse_header(stream: bytes) -> CodeStreamHeader:
    if len(stream) < HEADER_SIZE:
        raise UnsupportedFormatError("stream shorter than a header")
    magic, version, flags, et_code, _reserved, orig_len, block_size, seg_count, crc = (
        _HEADER.unpack_from(stream)
    )
    if magic != MAGIC:
        raise UnsupportedFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedFormatError(f"unsupported version {version}")
    if flags & ~(FLAG_BYTE_GROUPED | FLAG_DELTA):
        raise CorruptStreamError(f"unknown flag bits 0x{flags:02x}")
    if _reserved != 0:
        raise CorruptStreamError("reserved header byte must be zero")
    try:
        et = ElementType.from_code(et_code)
    except ValueError as exc:
        raise CorruptStreamError(str(exc)) from exc
    try:
        validate_block_size(block_size)
    except ConfigError as exc:
        raise CorruptStreamError(str(exc)) from exc
    if seg_count < 1:
        raise CorruptStreamError("segment count must be >= 1")
    if orig_len % et.width != 0:
        raise CorruptStreamError(
            f"original length {orig_len} is not {et.name}-aligned"
        )
    return CodeStreamHeader(flags, et, orig_len, block_size, seg_count, crc)


@dataclass(frozen=True)
class BlockRecord:
    """One encoded block: mode, original length and mode-dependent payload."""

    mode: int
    original_length: int
    payload: bytes

    def to_bytes(self) -> bytes:
        return _RECORD_HEADER.pack(self.mode, self.original_length) + self.payload

    @property
    def serialized_size(self) -> int:
        return _RECORD_HEADER.size + len(self.payload)


def _encode_record(block: np.ndarray) -> BlockRecord:
    """Pick the cheapest mode for one block and serialize its payload."""
    n = int(block.size)
    h = histogram(block)
    if int(h.counts.max()) == n:
        # Monosymbolic: the (symbol, count) pair costs one payload byte and
        # always beats Huffman's codebook overhead, and beats stored for any
        # n >= 1 (ties prefer the lower mode, and RLE < stored).
        return BlockRecord(MODE_RLE, n, bytes([int(block[0])]))
    cb = build_codebook(h)
    bits = cost_bits(cb, h)
    huffman_size = _HUFFMAN_OVERHEAD + (bits + 7) // 8
    if huffman_size <= n:
        enc = encode_block(block, assign_canonical(cb))
        payload = pack_codebook(cb) + _BITCOUNT.pack(enc.bit_length) + enc.data
        return BlockRecord(MODE_HUFFMAN, n, payload)
    return BlockRecord(MODE_STORED, n, block.tobytes())


def compress_buffer(data: bytes, block_size: int = DEFAULT_BLOCK_SIZE) -> list[BlockRecord]:
    """Encode ``data`` as consecutive independently-coded block records."""
    validate_block_size(block_size)
    arr = np.frombuffer(data, dtype=np.uint8)
    return [
        _encode_record(arr[off : off + block_size])
        for off in range(0, arr.size, block_size)
    ]


def _decode_record(mode: int, length: int, payload: bytes) -> bytes:
    if mode == MODE_RLE:
        if len(payload) != 1:
            raise CorruptStreamError("RLE payload must be a single symbol byte")
        return payload * length
    if mode == MODE_STORED:
        if len(payload) != length:
            raise CorruptStreamError(
                f"stored payload is {len(payload)} bytes, expected {length}"
            )
        return bytes(payload)
    if mode == MODE_HUFFMAN:
        if len(payload) < _HUFFMAN_OVERHEAD:
            raise CorruptStreamError("Huffman record truncated")
        try:
            cb = unpack_codebook(payload[:CODEBOOK_WIRE_SIZE])
        except MalformedCodebookError as exc:
            raise CorruptStreamError(str(exc)) from exc
        (bit_length,) = _BITCOUNT.unpack_from(payload, CODEBOOK_WIRE_SIZE)
        bits = payload[_HUFFMAN_OVERHEAD:]
        if len(bits) != (bit_length + 7) // 8:
            raise CorruptStreamError(
                f"Huffman payload holds {len(bits)} bytes for {bit_length} bits"
            )
        return decode_block(bits, bit_length, cb, length)
    raise CorruptStreamError(f"unknown block mode {mode}")


def decompress_buffer(records: list[BlockRecord], expected_length: int) -> bytes:
    """Exact inverse of :func:`compress_buffer`."""
    parts = [_decode_record(r.mode, r.original_length, r.payload) for r in records]
    out = b"".join(parts)
    if len(out) != expected_length:
        raise CorruptStreamError(
            f"records decode to {len(out)} bytes, expected {expected_length}"
        )
    return out


def compress_segment(data: bytes, block_size: int) -> bytes:
    """Serialized block records for one segment."""
    return b"".join(r.to_bytes() for r in compress_buffer(data, block_size))


def decompress_segment(buf: bytes, expected_length: int, block_size: int) -> bytes:
    """Decode one segment's records; rejects trailing or oversized records."""
    out = bytearray()
    view = memoryview(buf)
    off = 0
    while len(out) < expected_length:
        if off + _RECORD_HEADER.size > len(buf):
            raise CorruptStreamError("segment truncated inside a record header")
        mode, length = _RECORD_HEADER.unpack_from(view, off)
        off += _RECORD_HEADER.size
        if length == 0 or length > block_size:
            raise CorruptStreamError(f"block length {length} out of range")
        if length > expected_length - len(out):
            raise CorruptStreamError("block overruns its segment")
        payload_len = _payload_size(mode, length, view, off)
        if off + payload_len > len(buf):
            raise CorruptStreamError("segment truncated inside a record payload")
        out += _decode_record(mode, length, bytes(view[off : off + payload_len]))
        off += payload_len
    if off != len(buf):
        raise CorruptStreamError("trailing bytes after final record")
    return bytes(out)


def _payload_size(mode: int, length: int, view: memoryview, off: int) -> int:
    if mode == MODE_RLE:
        return 1
    if mode == MODE_STORED:
        return length
    if mode == MODE_HUFFMAN:
        if off + _HUFFMAN_OVERHEAD > len(view):
            raise CorruptStreamError("Huffman record truncated")
        (bit_length,) = _BITCOUNT.unpack_from(view, off + CODEBOOK_WIRE_SIZE)
        return _HUFFMAN_OVERHEAD + (bit_length + 7) // 8
    raise CorruptStreamError(f"unknown block mode {mode}")


def segment_bounds(window_length: int, block_size: int, segment_count: int) -> list[tuple[int, int]]:
    """Near-equal, block-aligned byte ranges covering one window.

    Splitting is done in whole blocks so block records never straddle a
    segment; when the window has fewer blocks than segments, some segments
    are empty (and still get a table entry).
    """
    nblocks = (window_length + block_size - 1) // block_size
    edges = [
        min(window_length, (i * nblocks // segment_count) * block_size)
        for i in range(segment_count)
    ]
    edges.append(window_length)
    return list(zip(edges[:-1], edges[1:]))


def _validate_options(
    element_type: ElementType, block_size: int, segment_count: int, buffer_size: int
) -> None:
    validate_block_size(block_size)
    if segment_count < 1:
        raise ConfigError(f"segment count must be >= 1, got {segment_count}")
    if buffer_size < block_size:
        raise ConfigError(
            f"buffer size {buffer_size} must be >= block size {block_size}"
        )
    if buffer_size % element_type.width != 0:
        raise ConfigError(
            f"buffer size {buffer_size} must be a multiple of the "
            f"{element_type.name} element width {element_type.width}"
        )


def _input_flags(buf: TensorBuffer | DeltaBuffer, byte_group: bool) -> int:
    flags = FLAG_BYTE_GROUPED if byte_group else 0
    if isinstance(buf, DeltaBuffer):
        flags |= FLAG_DELTA
    return flags


def lmc_compress(
    buf: TensorBuffer | DeltaBuffer,
    *,
    byte_group: bool = True,
    block_size: int = DEFAULT_BLOCK_SIZE,
    segment_count: int = 1,
    buffer_size: int = DEFAULT_BUFFER_SIZE,
) -> bytes:
    """Serial compression of one buffer into a complete codestream."""
    et = buf.element_type
    _validate_options(et, block_size, segment_count, buffer_size)
    data = buf.data
    header = CodeStreamHeader(
        _input_flags(buf, byte_group),
        et,
        len(data),
        block_size,
        segment_count,
        zlib.crc32(data),
    )
    out = bytearray(header.pack())
    for woff in range(0, len(data), buffer_size):
        window = data[woff : woff + buffer_size]
        if byte_group:
            window = group_bytes(window, et.width)
        payloads = [
            compress_segment(window[a:b], block_size)
            for a, b in segment_bounds(len(window), block_size, segment_count)
        ]
        _append_window(out, window, payloads, block_size, segment_count)
    return bytes(out)


def _append_window(
    out: bytearray,
    window: bytes,
    payloads: list[bytes],
    block_size: int,
    segment_count: int,
) -> None:
    bounds = segment_bounds(len(window), block_size, segment_count)
    for (a, b), payload in zip(bounds, payloads):
        out += _SEGMENT_ENTRY.pack(b - a, len(payload))
    for payload in payloads:
        out += payload


def iter_windows(stream: bytes, header: CodeStreamHeader):
    """Yield (segment table, [compressed segment bytes]) per window.

    Performs all structural bounds checking; decoding is left to the caller
    so serial and parallel decompressors share one walk.
    """
    off = HEADER_SIZE
    remaining = header.original_length
    table_size = _SEGMENT_ENTRY.size * header.segment_count
    while remaining > 0:
        if off + table_size > len(stream):
            raise CorruptStreamError("stream truncated inside a segment table")
        table = [
            _SEGMENT_ENTRY.unpack_from(stream, off + i * _SEGMENT_ENTRY.size)
            for i in range(header.segment_count)
        ]
        off += table_size
        window_original = sum(o for o, _ in table)
        if window_original == 0 or window_original > remaining:
            raise CorruptStreamError("segment table original lengths are invalid")
        segments = []
        for original, compressed in table:
            if off + compressed > len(stream):
                raise CorruptStreamError("stream truncated inside a segment")
            if (original == 0) != (compressed == 0):
                raise CorruptStreamError("segment table entry is inconsistent")
            segments.append(stream[off : off + compressed])
            off += compressed
        yield table, segments
        remaining -= window_original
    if off != len(stream):
        raise CorruptStreamError(f"{len(stream) - off} trailing bytes after stream end")


def reassemble_window(
    header: CodeStreamHeader,
    table: list[tuple[int, int]],
    decoded_segments: list[bytes],
) -> bytes:
    window = b"".join(decoded_segments)
    if header.byte_grouped:
        width = header.element_type.width
        if len(window) % width != 0:
            raise CorruptStreamError("grouped window is not element-aligned")
        window = ungroup_bytes(window, width)
    return window


def lmc_decompress(stream: bytes) -> TensorBuffer:
    """Serial decompression; verifies structure and payload CRC."""
    header = parse_header(stream)
    out = bytearray()
    for table, segments in iter_windows(stream, header):
        decoded = [
            decompress_segment(seg, original, header.block_size)
            for (original, _), seg in zip(table, segments)
        ]
        out += reassemble_window(header, table, decoded)
    if len(out) != header.original_length:
        raise CorruptStreamError(
            f"stream decodes to {len(out)} bytes, header says {header.original_length}"
        )
    payload = bytes(out)
    if zlib.crc32(payload) != header.crc32:
        raise IntegrityError("payload CRC mismatch")
    return TensorBuffer(payload, header.element_type)


def compression_ratio(stream: bytes, original_length: int) -> float:
    """Compressed/original size; infinity-free for empty originals."""
    if original_length == 0:
        return 1.0
    return len(stream) / original_length
