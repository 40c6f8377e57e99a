"""Command line interface.

Exit codes are stable: 0 ok, 2 bad input (alignment, empty, arguments),
3 integrity/corruption, 4 shape mismatch, 5 missing chain data, 6 bad
configuration. IO failures outside those categories exit 1.
"""

from __future__ import annotations

import functools
import json
import os
import sys
import time
from pathlib import Path

import click

from . import chain as chain_mod
from .analysis import (
    available_codecs,
    bit_set_ratios,
    bitstats_csv,
    bitstats_json,
    ratio_over_time,
    ratios_csv,
    ratios_json,
    synthetic_trajectory,
    xor_flip_ratios,
)
from .delta import xor_delta
from .entropy import DEFAULT_BLOCK_SIZE, estimate_file_entropy_ratio
from .errors import (
    AlignmentError,
    ConfigError,
    CorruptStreamError,
    DtypeMismatchError,
    EmptyInputError,
    IntegrityError,
    LmcError,
    MissingStreamError,
    ShapeMismatchError,
    UnsupportedFormatError,
)
from .parallel import (
    DEFAULT_BUFFER_SIZE,
    bench_report_csv,
    plmc_compress,
    plmc_decompress,
    throughput_bench,
)
from .types import ElementType, TensorBuffer

EXIT_INPUT = 2
EXIT_INTEGRITY = 3
EXIT_SHAPE = 4
EXIT_MISSING = 5
EXIT_CONFIG = 6

_EXIT_CODES: list[tuple[type[Exception], int]] = [
    (AlignmentError, EXIT_INPUT),
    (EmptyInputError, EXIT_INPUT),
    (CorruptStreamError, EXIT_INTEGRITY),
    (IntegrityError, EXIT_INTEGRITY),
    (UnsupportedFormatError, EXIT_INTEGRITY),
    (ShapeMismatchError, EXIT_SHAPE),
    (DtypeMismatchError, EXIT_SHAPE),
    (MissingStreamError, EXIT_MISSING),
    (ConfigError, EXIT_CONFIG),
    (FileNotFoundError, EXIT_MISSING),
    (LmcError, EXIT_INPUT),
    (OSError, 1),
]


def _exit_code(exc: Exception) -> int:
    for etype, code in _EXIT_CODES:
        if isinstance(exc, etype):
            return code
    return 1


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (LmcError, OSError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(_exit_code(exc) if not isinstance(exc, ValueError) else EXIT_INPUT)

    return wrapper


def _dtype_option(default: str = "raw"):
    return click.option(
        "--dtype",
        type=click.Choice(["bf16", "fp16", "fp32", "raw"]),
        default=default,
        show_default=True,
        help="Element type of the raw input bytes.",
    )


def _default_threads() -> int:
    env = os.environ.get("LMC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


_threads_option = click.option(
    "--threads",
    type=int,
    default=None,
    help="Worker count (default: LMC_THREADS or the detected core count).",
)


@click.group()
@click.version_option(package_name="lmc")
def main() -> None:
    """Lossless compression for LLM checkpoint tensor data."""


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("output_path", type=click.Path(dir_okay=False, path_type=Path))
@_dtype_option()
@click.option("--block-size", type=int, default=DEFAULT_BLOCK_SIZE, show_default=True)
@click.option("--buffer-size", type=int, default=DEFAULT_BUFFER_SIZE, show_default=True)
@_threads_option
@click.option("--no-bytegroup", is_flag=True, help="Skip the byte-grouping stage.")
@click.option(
    "--delta",
    "delta_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Compress the XOR delta against this previous-step file.",
)
@handle_errors
def compress(input_path, output_path, dtype, block_size, buffer_size, threads, no_bytegroup, delta_path):
    """Compress a raw tensor file into a codestream."""
    et = ElementType.from_name(dtype)
    data = input_path.read_bytes()
    buf = TensorBuffer(data, et)
    if delta_path is not None:
        prev = TensorBuffer(delta_path.read_bytes(), et)
        buf = xor_delta(prev, buf)
    threads = threads or _default_threads()
    start = time.perf_counter()
    stream = plmc_compress(
        buf,
        byte_group=not no_bytegroup,
        block_size=block_size,
        buffer_size=buffer_size,
        segment_count=threads,
        workers=threads,
    )
    elapsed = max(time.perf_counter() - start, 1e-9)
    output_path.write_bytes(stream)
    ratio = len(stream) / len(data) if data else 1.0
    mib_s = len(data) / (1024 * 1024) / elapsed
    click.echo(f"ratio={ratio:.6f} MiB/s={mib_s:.2f}", err=True)


@main.command()
@click.argument("input_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("output_path", type=click.Path(dir_okay=False, path_type=Path))
@_threads_option
@handle_errors
def decompress(input_path, output_path, threads):
    """Restore the exact original bytes from a codestream."""
    stream = input_path.read_bytes()
    buf = plmc_decompress(stream, worker_count=threads or _default_threads())
    output_path.write_bytes(buf.data)


@main.group()
def checkpoint() -> None:
    """Manage incremental checkpoint chains."""


def _read_step_shards(files: tuple[Path, ...], dtype: str) -> dict[str, TensorBuffer]:
    """Shard files for one step: raw .bin files or one JSONL shard manifest."""
    shards: dict[str, TensorBuffer] = {}
    for path in files:
        if path.suffix == ".jsonl":
            for line in path.read_text().splitlines():
                if not line.strip():
                    continue
                spec = json.loads(line)
                shard_path = Path(spec["path"])
                if not shard_path.is_absolute():
                    shard_path = path.parent / shard_path
                et = ElementType.from_name(spec.get("dtype", dtype))
                shards[spec["name"]] = TensorBuffer(shard_path.read_bytes(), et)
        else:
            et = ElementType.from_name(dtype)
            shards[path.name] = TensorBuffer(path.read_bytes(), et)
    return shards


@checkpoint.command("add")
@click.argument("chain_dir", type=click.Path(file_okay=False, path_type=Path))
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_dtype_option()
@click.option("--step", type=int, default=None, help="Expected step index (rejects duplicates).")
@click.option("--block-size", type=int, default=DEFAULT_BLOCK_SIZE, show_default=True)
@handle_errors
def checkpoint_add(chain_dir, files, dtype, step, block_size):
    """Add the next checkpoint step (raw shard files or a .jsonl manifest)."""
    shards = _read_step_shards(files, dtype)
    idx = chain_mod.add_step(chain_dir, shards, step=step, block_size=block_size)
    click.echo(f"added step {idx} ({len(shards)} shard(s))", err=True)


@checkpoint.command("restore")
@click.argument("chain_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("step", type=int)
@click.argument("output_dir", type=click.Path(file_okay=False, path_type=Path))
@handle_errors
def checkpoint_restore(chain_dir, step, output_dir):
    """Write every shard of one step, byte-exact, into OUTPUT_DIR."""
    shards = chain_mod.restore_step(chain_dir, step)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    for name, buf in sorted(shards.items()):
        (output_dir / name).write_bytes(buf.data)
    click.echo(f"restored step {step} ({len(shards)} shard(s))", err=True)


@main.group()
def analyze() -> None:
    """Emit the measurement tables behind the compressibility analysis."""


def _write_output(text: str, output: Path | None) -> None:
    if output is None:
        click.echo(text, nl=False)
    else:
        output.write_text(text)


def _emit_table(csv_text: str, json_text: str, output: Path | None) -> None:
    """CSV by default; a .json output path selects the JSON form."""
    if output is not None and output.suffix == ".json":
        output.write_text(json_text)
    else:
        _write_output(csv_text, output)


@analyze.command("bits")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_dtype_option("bf16")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
@handle_errors
def analyze_bits(files, dtype, output):
    """Per-bit set ratios of one shard per step (file order = step order)."""
    et = ElementType.from_name(dtype)
    stats = [
        bit_set_ratios(TensorBuffer(path.read_bytes(), et), step=i)
        for i, path in enumerate(files)
    ]
    _emit_table(bitstats_csv(stats), bitstats_json(stats), output)


@analyze.command("flips")
@click.argument("prev_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("next_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_dtype_option("bf16")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
@handle_errors
def analyze_flips(prev_path, next_path, dtype, output):
    """Per-bit XOR flip ratios between two consecutive step files."""
    et = ElementType.from_name(dtype)
    stats = xor_flip_ratios(
        TensorBuffer(prev_path.read_bytes(), et),
        TensorBuffer(next_path.read_bytes(), et),
    )
    _emit_table(bitstats_csv([stats]), bitstats_json([stats]), output)


@analyze.command("ratio-series")
@click.argument("source", type=click.Path(exists=True, path_type=Path))
@click.option("--codec", default="bg-lmc", show_default=True, help="lmc, bg-lmc, or an external engine (bz2/gzip/lz4, bg- prefixed allowed).")
@_dtype_option("bf16")
@click.option("--block-size", type=int, default=DEFAULT_BLOCK_SIZE, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
@handle_errors
def analyze_ratio_series(source, codec, dtype, block_size, output):
    """Compression ratio of each consecutive step delta.

    SOURCE is a checkpoint chain directory (with a manifest) or a directory
    of raw per-step shard files in lexicographic step order.
    """
    shards = _load_step_sequence(source, dtype)
    points = ratio_over_time(shards, codec, block_size=block_size)
    _emit_table(ratios_csv(points), ratios_json(points), output)


def _load_step_sequence(source: Path, dtype: str) -> list[TensorBuffer]:
    if (source / chain_mod.MANIFEST_NAME).exists():
        manifest = chain_mod.load_manifest(source)
        steps = []
        for step in range(manifest.last_step + 1):
            shards = chain_mod.restore_step(source, step)
            joined = b"".join(shards[name].data for name in sorted(shards))
            et = shards[next(iter(sorted(shards)))].element_type
            steps.append(TensorBuffer(joined, et))
        return steps
    if source.is_dir():
        files = sorted(p for p in source.iterdir() if p.is_file())
        et = ElementType.from_name(dtype)
        if len(files) < 2:
            raise ConfigError(f"{source} holds {len(files)} step file(s); need >= 2")
        return [TensorBuffer(p.read_bytes(), et) for p in files]
    raise ConfigError(f"{source} is neither a chain directory nor a step directory")


@analyze.command("entropy")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--block-size", type=int, default=DEFAULT_BLOCK_SIZE, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
@handle_errors
def analyze_entropy(files, block_size, output):
    """Ideal block-entropy compression ratio per file."""
    lines = ["path,bytes,block_size,ideal_ratio"]
    for path in files:
        data = path.read_bytes()
        ratio = estimate_file_entropy_ratio(data, block_size)
        lines.append(f"{path},{len(data)},{block_size},{ratio:.6f}")
    _write_output("\n".join(lines) + "\n", output)


@main.group()
def bench() -> None:
    """Throughput measurements."""


@bench.command("scale")
@click.argument("corpus", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--threads", default="1,2,4", show_default=True, help="Comma-separated worker counts.")
@_dtype_option()
@click.option("--block-size", type=int, default=DEFAULT_BLOCK_SIZE, show_default=True)
@click.option("--buffer-size", type=int, default=DEFAULT_BUFFER_SIZE, show_default=True)
@click.option("--no-bytegroup", is_flag=True)
@click.option("--synthetic-mib", type=int, default=None, help="Generate an in-memory synthetic delta corpus of this size instead of reading CORPUS.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for the synthetic corpus.")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
@handle_errors
def bench_scale(corpus, threads, dtype, block_size, buffer_size, no_bytegroup, synthetic_mib, seed, output):
    """Compress/decompress throughput at each worker count (CSV report)."""
    try:
        counts = [int(t) for t in threads.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"bad --threads list {threads!r}") from None
    if not counts or any(c < 1 for c in counts):
        raise ConfigError(f"bad --threads list {threads!r}")
    if corpus is not None:
        data = corpus.read_bytes()
        et = ElementType.from_name(dtype)
    elif synthetic_mib:
        data = _synthetic_corpus(synthetic_mib, seed)
        et = ElementType.BF16
    else:
        raise ConfigError("give a CORPUS file or --synthetic-mib")
    rows = throughput_bench(
        data,
        counts,
        element_type=et,
        byte_group=not no_bytegroup,
        block_size=block_size,
        buffer_size=buffer_size,
    )
    _write_output(bench_report_csv(rows), output)


def _synthetic_corpus(mib: int, seed: int) -> bytes:
    """Concatenated mid-convergence bf16 trajectory deltas of roughly `mib` MiB."""
    from .analysis import trajectory_deltas

    target = mib * 1024 * 1024
    elements = 2 * 1024 * 1024
    parts: list[bytes] = []
    size = 0
    steps = max(3, target // (elements * 2) + 6)
    shards = synthetic_trajectory(elements, steps, seed=seed)
    for delta in trajectory_deltas(shards):
        if delta.step_to <= 4:
            continue  # skip the noisiest start so modes stay mixed
        parts.append(delta.data)
        size += len(delta.data)
        if size >= target:
            break
    return b"".join(parts)[:target]


if __name__ == "__main__":
    main()
