import numpy as np
import pytest

from lmc.analysis import synthetic_trajectory, trajectory_deltas
from lmc.types import ElementType


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)


def delta_corpus(total_bytes: int, element_type: ElementType, seed: int) -> bytes:
    """Concatenated consecutive shard-deltas from a converging trajectory.

    Skips the first few (noisiest) steps so the corpus mixes Huffman, RLE
    and stored blocks the way mid-training checkpoint deltas do.
    """
    elements = 1 << 20
    per_delta = elements * element_type.width
    steps = 5 + (total_bytes + per_delta - 1) // per_delta + 1
    parts = []
    size = 0
    shards = synthetic_trajectory(
        elements, steps, element_type=element_type, seed=seed
    )
    for delta in trajectory_deltas(shards):
        if delta.step_to <= 4:
            continue
        parts.append(delta.data)
        size += len(delta.data)
        if size >= total_bytes:
            break
    out = b"".join(parts)[:total_bytes]
    assert len(out) == total_bytes
    return out


@pytest.fixture(scope="session")
def bf16_delta_corpus_4mib():
    return delta_corpus(4 << 20, ElementType.BF16, seed=101)
