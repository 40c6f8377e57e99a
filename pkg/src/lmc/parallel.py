"""Data-parallel segmented compression (PLMC) over the serial block codec.

Each buffer-size window is byte-grouped, split into segment_count block-
aligned pieces, and the pieces are encoded concurrently. Workers own
disjoint input/output ranges and results are joined in segment order, so
the stream bytes depend only on the input and the options: segment_count is
a recorded stream property, worker count is a runtime hint, and any worker
count decodes any stream. Work is distributed across processes because the
hot paths are CPU-bound.
"""

from __future__ import annotations

import os
import statistics
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .entropy import DEFAULT_BLOCK_SIZE
from .errors import CorruptStreamError, EmptyInputError, IntegrityError
from .stream import (
    DEFAULT_BUFFER_SIZE,
    CodeStreamHeader,
    _append_window,
    _input_flags,
    _validate_options,
    compress_segment,
    compression_ratio,
    decompress_segment,
    group_bytes,
    iter_windows,
    lmc_compress,
    lmc_decompress,
    parse_header,
    reassemble_window,
    segment_bounds,
)
from .types import DeltaBuffer, ElementType, TensorBuffer


# Below this many input bytes a worker pool costs more to spawn than it
# saves; scheduling falls back to in-process. Output bytes are unaffected.
_MIN_PARALLEL_BYTES = 8 * 1024 * 1024


def _default_workers(segment_count: int) -> int:
    return max(1, min(segment_count, os.cpu_count() or 1))


def plmc_compress(
    buf: TensorBuffer | DeltaBuffer,
    *,
    byte_group: bool = True,
    block_size: int = DEFAULT_BLOCK_SIZE,
    segment_count: int | None = None,
    buffer_size: int = DEFAULT_BUFFER_SIZE,
    workers: int | None = None,
) -> bytes:
    """Compress with segment-level parallelism.

    Byte-identical to :func:`lmc_compress` called with the same options;
    ``workers`` only chooses how many processes do the encoding.
    """
    if segment_count is None:
        segment_count = os.cpu_count() or 1
    et = buf.element_type
    _validate_options(et, block_size, segment_count, buffer_size)
    if workers is None:
        workers = _default_workers(segment_count)
    if workers <= 1 or segment_count == 1 or len(buf.data) < _MIN_PARALLEL_BYTES:
        return lmc_compress(
            buf,
            byte_group=byte_group,
            block_size=block_size,
            segment_count=segment_count,
            buffer_size=buffer_size,
        )

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
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for woff in range(0, len(data), buffer_size):
            window = data[woff : woff + buffer_size]
            if byte_group:
                window = group_bytes(window, et.width)
            bounds = segment_bounds(len(window), block_size, segment_count)
            futures = [
                pool.submit(compress_segment, window[a:b], block_size)
                for a, b in bounds
            ]
            _append_window(out, window, [f.result() for f in futures], block_size, segment_count)
    return bytes(out)


def plmc_decompress(stream: bytes, worker_count: int | None = None) -> TensorBuffer:
    """Decode segments concurrently; output is identical for any worker count."""
    if worker_count is None:
        worker_count = os.cpu_count() or 1
    if worker_count <= 1 or len(stream) < _MIN_PARALLEL_BYTES:
        return lmc_decompress(stream)
    header = parse_header(stream)
    out = bytearray()
    with ProcessPoolExecutor(max_workers=worker_count) as pool:
        for table, segments in iter_windows(stream, header):
            futures = [
                pool.submit(decompress_segment, seg, original, header.block_size)
                for (original, _), seg in zip(table, segments)
            ]
            out += reassemble_window(header, table, [f.result() for f in futures])
    if len(out) != header.original_length:
        raise CorruptStreamError(
            f"stream decodes to {len(out)} bytes, header says {header.original_length}"
        )
    payload = bytes(out)
    if zlib.crc32(payload) != header.crc32:
        raise IntegrityError("payload CRC mismatch")
    return TensorBuffer(payload, header.element_type)


@dataclass(frozen=True)
class BenchRow:
    """One throughput measurement at a fixed worker count."""

    threads: int
    compress_mib_s: float
    decompress_mib_s: float
    ratio: float


BENCH_CSV_HEADER = "threads,compress_mib_s,decompress_mib_s,ratio"


def throughput_bench(
    corpus: bytes,
    thread_counts: Sequence[int],
    *,
    element_type: ElementType = ElementType.RAW8,
    byte_group: bool = True,
    block_size: int = DEFAULT_BLOCK_SIZE,
    buffer_size: int = DEFAULT_BUFFER_SIZE,
    repeats: int = 3,
) -> list[BenchRow]:
    """Wall-clock compress/decompress throughput per thread count.

    Measurement procedure: one untimed warm-up pass per thread count (which
    also round-trip checks the corpus), then the median of ``repeats`` timed
    runs. The corpus must already be in memory so IO does not pollute the
    numbers.
    """
    if len(corpus) == 0:
        raise EmptyInputError("bench corpus is empty")
    buf = TensorBuffer(bytes(corpus), element_type)
    mib = len(corpus) / (1024 * 1024)
    rows = []
    for threads in thread_counts:
        opts = dict(
            byte_group=byte_group,
            block_size=block_size,
            segment_count=threads,
            buffer_size=buffer_size,
            workers=threads,
        )
        stream_bytes = plmc_compress(buf, **opts)
        restored = plmc_decompress(stream_bytes, worker_count=threads)
        if restored.data != buf.data:
            raise IntegrityError("bench warm-up round trip mismatch")
        ctimes, dtimes = [], []
        for _ in range(repeats):
            t0 = time.perf_counter()
            stream_bytes = plmc_compress(buf, **opts)
            ctimes.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            plmc_decompress(stream_bytes, worker_count=threads)
            dtimes.append(time.perf_counter() - t0)
        rows.append(
            BenchRow(
                threads,
                mib / statistics.median(ctimes),
                mib / statistics.median(dtimes),
                compression_ratio(stream_bytes, len(corpus)),
            )
        )
    return rows


def bench_report_csv(rows: Sequence[BenchRow]) -> str:
    lines = [BENCH_CSV_HEADER]
    lines += [
        f"{r.threads},{r.compress_mib_s:.2f},{r.decompress_mib_s:.2f},{r.ratio:.6f}"
        for r in rows
    ]
    return "\n".join(lines) + "\n"
