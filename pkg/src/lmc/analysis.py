"""Shard measurements: bit statistics, flip maps, compressibility over time.

Everything here reads buffers the codec produces or consumes and emits plain
data (arrays, CSV) for plotting elsewhere. Real checkpoint corpora are not
required: a seeded synthetic trajectory generator stands in for them, doing
a per-element random walk whose step scale decays geometrically, which
imitates how training weights start out random within a small range and then
settle. That is a modeling convenience, not a fidelity claim.
"""

from __future__ import annotations

import json
import shutil
import subprocess
import time
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .bytegroup import group_bytes
from .delta import xor_delta
from .entropy import DEFAULT_BLOCK_SIZE
from .errors import ConfigError
from .stream import lmc_compress, lmc_decompress
from .types import DeltaBuffer, ElementType, TensorBuffer

# ---------------------------------------------------------------------------
# bfloat16 conversion (round to nearest even), used by the generator and the
# increment flip map. numpy has no native bfloat16.
# ---------------------------------------------------------------------------


def bf16_encode(values: np.ndarray) -> np.ndarray:
    """float -> bfloat16 bit patterns (uint16), rounding to nearest even."""
    f = np.ascontiguousarray(values, dtype=np.float32)
    u = f.view(np.uint32)
    rounding = np.uint32(0x7FFF) + ((u >> 16) & 1)
    return ((u + rounding) >> 16).astype(np.uint16)


def bf16_decode(codes: np.ndarray) -> np.ndarray:
    """bfloat16 bit patterns -> float32 (exact)."""
    u = np.ascontiguousarray(codes, dtype=np.uint16).astype(np.uint32) << 16
    return u.view(np.float32)


def encode_elements(values: np.ndarray, element_type: ElementType) -> bytes:
    """Serialize float values as little-endian elements of the given type."""
    if element_type is ElementType.BF16:
        return bf16_encode(values).astype("<u2").tobytes()
    if element_type is ElementType.FP16:
        return np.asarray(values, dtype="<f2").tobytes()
    if element_type is ElementType.FP32:
        return np.asarray(values, dtype="<f4").tobytes()
    raise ConfigError(f"cannot encode float values as {element_type.name}")


# ---------------------------------------------------------------------------
# Per-bit statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BitStats:
    """Set-bit ratio per element bit position for one shard at one step."""

    step: int
    ratios: np.ndarray  # shape (8 * width,), float64 in [0, 1]


_UINT_VIEWS = {2: "<u2", 4: "<u4"}


def bit_set_ratios(shard: TensorBuffer, *, step: int = 0) -> BitStats:
    """Fraction of elements with each bit set; needs a fixed element width."""
    width = shard.element_type.width
    if width not in _UINT_VIEWS:
        raise ConfigError(
            "bit statistics need 16- or 32-bit elements; RAW8 has no "
            "fixed bit positions"
        )
    elems = np.frombuffer(shard.data, dtype=_UINT_VIEWS[width])
    nbits = 8 * width
    ratios = np.empty(nbits, dtype=np.float64)
    if elems.size == 0:
        ratios[:] = 0.0
    else:
        for b in range(nbits):
            ratios[b] = float(np.mean((elems >> b) & 1))
    return BitStats(step, ratios)


def xor_flip_ratios(
    prev: TensorBuffer, next_: TensorBuffer, *, step_to: int = 1
) -> BitStats:
    """Per-bit flip ratio between two consecutive steps."""
    delta = xor_delta(prev, next_, step_from=step_to - 1)
    return bit_set_ratios(delta.to_tensor(), step=step_to)


# ---------------------------------------------------------------------------
# Increment flip map
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BitflipMap:
    """For each swept value, which bfloat16 bits differ after one increment."""

    values: np.ndarray  # shape (n,), float64
    flips: np.ndarray  # shape (n, 16), bool

    def flip_frequency(self) -> np.ndarray:
        """Fraction of increments that flip each bit."""
        return self.flips.mean(axis=0)


def increment_bitflip_map(lo: float, hi: float, step: float) -> BitflipMap:
    """Compare bf16(v) against bf16(v + step) for v in [lo, hi]."""
    if not (np.isfinite(lo) and np.isfinite(hi) and np.isfinite(step)):
        raise ConfigError("sweep bounds and step must be finite")
    if hi < lo:
        raise ConfigError(f"empty sweep: lo={lo} > hi={hi}")
    if step < 0:
        raise ConfigError(f"step must be >= 0, got {step}")
    if step == 0:
        values = np.array([lo, hi]) if hi > lo else np.array([lo])
        return BitflipMap(values, np.zeros((values.size, 16), dtype=bool))
    values = np.arange(lo, hi + step * 1e-9, step)
    before = bf16_encode(values)
    after = bf16_encode(values + step)
    diff = before ^ after
    flips = ((diff[:, None] >> np.arange(16)[None, :]) & 1).astype(bool)
    return BitflipMap(values, flips)


# ---------------------------------------------------------------------------
# Synthetic trajectory
# ---------------------------------------------------------------------------


def synthetic_trajectory(
    element_count: int,
    steps: int,
    *,
    sigma0: float = 0.005,
    gamma: float = 0.9,
    init_scale: float = 0.005,
    element_type: ElementType = ElementType.BF16,
    seed: int = 0,
) -> Iterator[TensorBuffer]:
    """Yield one shard per step of a converging random-walk trajectory.

    Step 0 is uniform in [-init_scale, init_scale]; step k+1 adds gaussian
    noise with scale sigma0 * gamma**k, so per-step change decays and the
    XOR deltas grow ever more compressible.
    """
    if element_count <= 0 or steps <= 0:
        raise ConfigError("element_count and steps must be positive")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-init_scale, init_scale, element_count)
    yield TensorBuffer(encode_elements(x, element_type), element_type)
    for k in range(steps - 1):
        x = x + rng.normal(0.0, sigma0 * gamma**k, element_count)
        yield TensorBuffer(encode_elements(x, element_type), element_type)


def trajectory_deltas(
    shards: Iterable[TensorBuffer],
) -> Iterator[DeltaBuffer]:
    """XOR deltas of consecutive trajectory steps, tagged with step indices."""
    it = iter(shards)
    prev = next(it, None)
    if prev is None:
        return
    for k, cur in enumerate(it):
        yield xor_delta(prev, cur, step_from=k)
        prev = cur


# ---------------------------------------------------------------------------
# Compression-ratio series and codec adapters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatioPoint:
    """Compression of one step's shard-delta under one codec."""

    step: int
    codec: str
    ratio: float
    encode_s: float
    decode_s: float


# External engines are invoked through their host binaries so their exact
# library versions never become a dependency; adapters exist only when the
# binary is on PATH.
_EXTERNAL_ENGINES = {
    "bz2": ("bzip2", ["-9", "-c"], ["-d", "-c"]),
    "gzip": ("gzip", ["-6", "-c"], ["-d", "-c"]),
    "lz4": ("lz4", ["-1", "-c"], ["-d", "-c"]),
}


def external_engine_available(name: str) -> bool:
    base = name.removeprefix("bg-")
    return base in _EXTERNAL_ENGINES and shutil.which(_EXTERNAL_ENGINES[base][0]) is not None


def _run_engine(binary: str, args: list[str], data: bytes) -> bytes:
    proc = subprocess.run(
        [binary, *args], input=data, stdout=subprocess.PIPE, check=True
    )
    return proc.stdout


def available_codecs() -> list[str]:
    names = ["lmc", "bg-lmc"]
    for base in _EXTERNAL_ENGINES:
        if external_engine_available(base):
            names += [base, f"bg-{base}"]
    return names


def _measure_codec(
    codec: str, delta: DeltaBuffer, block_size: int
) -> tuple[float, float, float]:
    """(ratio, encode seconds, decode seconds) for one delta buffer."""
    grouped = codec.startswith("bg-")
    base = codec.removeprefix("bg-")
    if base == "lmc":
        t0 = time.perf_counter()
        stream = lmc_compress(delta, byte_group=grouped, block_size=block_size)
        enc_s = time.perf_counter() - t0
        t0 = time.perf_counter()
        lmc_decompress(stream)
        dec_s = time.perf_counter() - t0
        return len(stream) / len(delta), enc_s, dec_s
    if base not in _EXTERNAL_ENGINES:
        raise ConfigError(f"unknown codec {codec!r}; known: {available_codecs()}")
    binary, cargs, dargs = _EXTERNAL_ENGINES[base]
    if shutil.which(binary) is None:
        raise ConfigError(f"codec {codec!r} needs the {binary!r} binary on PATH")
    payload = delta.data
    if grouped:
        payload = group_bytes(payload, delta.element_type.width)
    t0 = time.perf_counter()
    compressed = _run_engine(binary, cargs, payload)
    enc_s = time.perf_counter() - t0
    t0 = time.perf_counter()
    _run_engine(binary, dargs, compressed)
    dec_s = time.perf_counter() - t0
    return len(compressed) / len(payload), enc_s, dec_s


def ratio_over_time(
    shards: Sequence[TensorBuffer] | Iterable[TensorBuffer],
    codec: str,
    *,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> list[RatioPoint]:
    """Compress each consecutive shard-delta and record ratio and timings.

    ``codec`` is "lmc", "bg-lmc", or an external engine name ("bz2",
    "gzip", "lz4", optionally "bg-"-prefixed). Point k describes the delta
    from step k-1 to step k.
    """
    points = []
    for delta in trajectory_deltas(shards):
        ratio, enc_s, dec_s = _measure_codec(codec, delta, block_size)
        points.append(RatioPoint(delta.step_to, codec, ratio, enc_s, dec_s))
    if not points:
        raise ConfigError("ratio_over_time needs at least two steps")
    return points


# ---------------------------------------------------------------------------
# CSV/JSON emitters; the column schemas are part of the tool's external
# interface and feed external plotting.
# ---------------------------------------------------------------------------

BITSTATS_CSV_HEADER = "step,bit,ratio"
RATIOS_CSV_HEADER = "step,codec,ratio,encode_s,decode_s"


def bitstats_csv(stats: Sequence[BitStats]) -> str:
    lines = [BITSTATS_CSV_HEADER]
    for s in stats:
        lines += [
            f"{s.step},{bit},{ratio:.9f}" for bit, ratio in enumerate(s.ratios)
        ]
    return "\n".join(lines) + "\n"


def bitstats_json(stats: Sequence[BitStats]) -> str:
    rows = [
        {"step": s.step, "bit": bit, "ratio": float(ratio)}
        for s in stats
        for bit, ratio in enumerate(s.ratios)
    ]
    return json.dumps(rows, indent=1) + "\n"


def ratios_csv(points: Sequence[RatioPoint]) -> str:
    lines = [RATIOS_CSV_HEADER]
    lines += [
        f"{p.step},{p.codec},{p.ratio:.6f},{p.encode_s:.6f},{p.decode_s:.6f}"
        for p in points
    ]
    return "\n".join(lines) + "\n"


def ratios_json(points: Sequence[RatioPoint]) -> str:
    rows = [
        {
            "step": p.step,
            "codec": p.codec,
            "ratio": p.ratio,
            "encode_s": p.encode_s,
            "decode_s": p.decode_s,
        }
        for p in points
    ]
    return json.dumps(rows, indent=1) + "\n"
