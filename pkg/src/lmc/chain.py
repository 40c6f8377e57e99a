"""Checkpoint delta chains: base + per-step XOR deltas with a JSONL manifest.

A chain directory holds one compressed stream per (step, shard) plus
``manifest.jsonl``: a chain-id line followed by one JSON object per entry.
Step 0 shards are stored whole; step N > 0 stores the XOR delta against the
reconstructed step N-1, so restoring step k walks base plus deltas 1..k.
Stream files are written before the manifest and the manifest is replaced
atomically, which keeps an interrupted add invisible; a lock file serializes
writers on the same chain.
"""

from __future__ import annotations

import json
import os
import re
import uuid
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path

from filelock import FileLock

from .delta import xor_apply, xor_delta
from .entropy import DEFAULT_BLOCK_SIZE
from .errors import (
    CorruptStreamError,
    DtypeMismatchError,
    IntegrityError,
    LmcError,
    MissingStreamError,
    ShapeMismatchError,
)
from .stream import lmc_compress, lmc_decompress, parse_header
from .types import DeltaBuffer, ElementType, TensorBuffer

MANIFEST_NAME = "manifest.jsonl"
LOCK_NAME = ".chain.lock"

ROLE_BASE = "base"
ROLE_DELTA = "delta"


@dataclass(frozen=True)
class ChainEntry:
    """One stored stream: a shard at a step, as base data or as a delta."""

    step: int
    role: str
    shard: str
    dtype: str
    length: int
    file: str
    crc32: int


@dataclass
class DeltaManifest:
    chain_id: str
    entries: list[ChainEntry]

    @property
    def last_step(self) -> int:
        return max((e.step for e in self.entries), default=-1)

    def step_entries(self, step: int) -> list[ChainEntry]:
        found = [e for e in self.entries if e.step == step]
        if not found:
            raise MissingStreamError(f"step {step} is not in the chain")
        return found

    def shard_names(self, step: int) -> list[str]:
        return sorted(e.shard for e in self.step_entries(step))

    def validate(self) -> None:
        if self.last_step < 0:
            return
        shards = self.shard_names(0)
        for e in self.step_entries(0):
            if e.role != ROLE_BASE:
                raise CorruptStreamError("step 0 entries must all be bases")
        for step in range(1, self.last_step + 1):
            if self.shard_names(step) != shards:
                raise CorruptStreamError(
                    f"step {step} does not cover the chain's shard set"
                )
            for e in self.step_entries(step):
                if e.role != ROLE_DELTA:
                    raise CorruptStreamError(
                        f"step {step} entries must all be deltas"
                    )


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _manifest_bytes(manifest: DeltaManifest) -> bytes:
    lines = [json.dumps({"chain_id": manifest.chain_id})]
    lines += [json.dumps(asdict(e), sort_keys=True) for e in manifest.entries]
    return ("\n".join(lines) + "\n").encode()


def save_manifest(chain_dir: Path, manifest: DeltaManifest) -> None:
    _atomic_write(chain_dir / MANIFEST_NAME, _manifest_bytes(manifest))


def load_manifest(chain_dir: Path) -> DeltaManifest:
    path = Path(chain_dir) / MANIFEST_NAME
    if not path.exists():
        raise MissingStreamError(f"no manifest at {path}")
    lines = path.read_text().splitlines()
    if not lines:
        raise CorruptStreamError(f"empty manifest at {path}")
    head = json.loads(lines[0])
    entries = [ChainEntry(**json.loads(line)) for line in lines[1:] if line.strip()]
    manifest = DeltaManifest(head["chain_id"], entries)
    manifest.validate()
    return manifest


def _stream_name(step: int, shard: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", shard)
    return f"step{step:06d}_{safe}.lmc"


def chain_lock(chain_dir: Path) -> FileLock:
    return FileLock(os.fspath(Path(chain_dir) / LOCK_NAME))


def add_step(
    chain_dir: str | Path,
    shards: dict[str, TensorBuffer],
    *,
    step: int | None = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
    byte_group: bool = True,
    segment_count: int = 1,
) -> int:
    """Append one checkpoint step (one or more named shards) to a chain.

    Returns the step index. New chains start at step 0 with the shards
    stored whole; later steps store deltas and must match the previous
    step's shard names, lengths and element types exactly.
    """
    chain_dir = Path(chain_dir)
    chain_dir.mkdir(parents=True, exist_ok=True)
    if not shards:
        raise ShapeMismatchError("a step needs at least one shard")
    with chain_lock(chain_dir):
        manifest_path = chain_dir / MANIFEST_NAME
        if manifest_path.exists():
            manifest = load_manifest(chain_dir)
        else:
            manifest = DeltaManifest(uuid.uuid4().hex, [])
        next_step = manifest.last_step + 1
        if step is not None and step != next_step:
            if step <= manifest.last_step:
                raise LmcError(
                    f"step {step} already exists (chain is at {manifest.last_step})"
                )
            raise LmcError(f"chain expects step {next_step}, got {step}")

        if next_step == 0:
            payloads: dict[str, TensorBuffer | DeltaBuffer] = dict(shards)
            role = ROLE_BASE
        else:
            previous = restore_step(chain_dir, next_step - 1)
            _check_shapes(previous, shards, next_step)
            payloads = {
                name: xor_delta(previous[name], shards[name], step_from=next_step - 1)
                for name in shards
            }
            role = ROLE_DELTA

        names = sorted(payloads)
        files = [_stream_name(next_step, n) for n in names]
        if len(set(files)) != len(files):
            raise LmcError(
                f"shard names {names} collide after filename sanitization"
            )
        new_entries = []
        for name in names:
            payload = payloads[name]
            stream = lmc_compress(
                payload,
                byte_group=byte_group,
                block_size=block_size,
                segment_count=segment_count,
            )
            fname = _stream_name(next_step, name)
            _atomic_write(chain_dir / fname, stream)
            new_entries.append(
                ChainEntry(
                    step=next_step,
                    role=role,
                    shard=name,
                    dtype=payload.element_type.name.lower(),
                    length=len(payload.data),
                    file=fname,
                    crc32=zlib.crc32(payload.data),
                )
            )
        manifest.entries.extend(new_entries)
        save_manifest(chain_dir, manifest)
    return next_step


def _check_shapes(
    previous: dict[str, TensorBuffer], current: dict[str, TensorBuffer], step: int
) -> None:
    if sorted(previous) != sorted(current):
        raise ShapeMismatchError(
            f"step {step} shard names {sorted(current)} do not match "
            f"step {step - 1} shard names {sorted(previous)}"
        )
    for name, prev in previous.items():
        cur = current[name]
        if len(cur.data) != len(prev.data):
            raise ShapeMismatchError(
                f"shard {name!r} changed length at step {step}: "
                f"{len(prev.data)} -> {len(cur.data)}"
            )
        if cur.element_type is not prev.element_type:
            raise DtypeMismatchError(
                f"shard {name!r} changed element type at step {step}"
            )


def _load_entry(chain_dir: Path, entry: ChainEntry) -> TensorBuffer:
    path = chain_dir / entry.file
    if not path.exists():
        raise MissingStreamError(f"stream file {path} is missing")
    stream = path.read_bytes()
    header = parse_header(stream)
    if header.crc32 != entry.crc32:
        raise IntegrityError(
            f"stream {entry.file} CRC does not match the manifest"
        )
    expected_delta = entry.role == ROLE_DELTA
    if header.delta_applied != expected_delta:
        raise CorruptStreamError(
            f"stream {entry.file} role flag does not match the manifest"
        )
    buf = lmc_decompress(stream)
    if len(buf.data) != entry.length:
        raise CorruptStreamError(
            f"stream {entry.file} decodes to {len(buf.data)} bytes, "
            f"manifest says {entry.length}"
        )
    if buf.element_type is not ElementType.from_name(entry.dtype):
        raise DtypeMismatchError(
            f"stream {entry.file} element type does not match the manifest"
        )
    return buf


def restore_step(chain_dir: str | Path, step: int) -> dict[str, TensorBuffer]:
    """Reconstruct every shard of one step, bit-exactly."""
    chain_dir = Path(chain_dir)
    manifest = load_manifest(chain_dir)
    if step < 0 or step > manifest.last_step:
        raise MissingStreamError(
            f"step {step} is not in the chain (last is {manifest.last_step})"
        )
    current: dict[str, TensorBuffer] = {}
    for e in manifest.step_entries(0):
        current[e.shard] = _load_entry(chain_dir, e)
    for k in range(1, step + 1):
        for e in manifest.step_entries(k):
            delta = _load_entry(chain_dir, e)
            current[e.shard] = xor_apply(
                current[e.shard],
                DeltaBuffer(delta.data, delta.element_type, k - 1, k),
            )
    return current
