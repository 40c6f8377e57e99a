import math

import numpy as np
import pytest

from lmc.entropy import (
    ByteHistogram,
    block_entropy,
    entropy,
    estimate_file_entropy_ratio,
    histogram,
    validate_block_size,
)
from lmc.errors import ConfigError, EmptyInputError


def test_histogram_direct_count():
    h = histogram(b"AAAB")
    assert h.total == 4
    assert h.counts[ord("A")] == 3
    assert h.counts[ord("B")] == 1
    assert h.counts.sum() == 4


def test_histogram_single_value_block():
    h = histogram(bytes(65536))
    assert h.counts[0] == 65536
    assert h.counts[1:].sum() == 0


def test_histogram_empty_raises():
    with pytest.raises(EmptyInputError):
        histogram(b"")


def test_histogram_uniform_counts_within_binomial_bounds(rng):
    data = rng.integers(0, 256, 65536, dtype=np.uint8)
    h = histogram(data.tobytes())
    n, p = 65536, 1 / 256
    sigma = math.sqrt(n * p * (1 - p))
    assert np.all(np.abs(h.counts - n * p) <= 5 * sigma)


def test_entropy_known_values():
    assert entropy(histogram(b"\x42" * 1000)) == 0.0
    assert entropy(histogram(b"AB" * 500)) == pytest.approx(1.0, abs=1e-12)
    uniform = ByteHistogram(np.full(256, 7, dtype=np.int64), 256 * 7)
    assert entropy(uniform) == pytest.approx(8.0, abs=1e-12)
    # {A: 1/2, B: 1/4, C: 1/4} -> 1.5 bits by hand evaluation
    assert entropy(histogram(b"AABC")) == pytest.approx(1.5, abs=1e-9)


def test_entropy_permutation_invariance(rng):
    counts = rng.integers(0, 50, 256).astype(np.int64)
    counts[0] += 1  # nonempty
    h1 = ByteHistogram(counts, int(counts.sum()))
    perm = rng.permutation(256)
    h2 = ByteHistogram(counts[perm], int(counts.sum()))
    assert entropy(h1) == pytest.approx(entropy(h2), abs=1e-12)


def test_entropy_bounds(rng):
    for _ in range(20):
        n = int(rng.integers(1, 5000))
        data = rng.integers(0, 256, n, dtype=np.uint8).tobytes()
        h = block_entropy(data)
        assert 0.0 <= h <= 8.0


def test_file_ratio_all_zero():
    assert estimate_file_entropy_ratio(bytes(300_000)) == 0.0


def test_file_ratio_uniform_random(rng):
    data = rng.integers(0, 256, 1 << 20, dtype=np.uint8).tobytes()
    assert estimate_file_entropy_ratio(data) == pytest.approx(1.0, abs=1e-3)


def test_file_ratio_half_constant_half_random(rng):
    block = 65536
    data = bytes(block) + rng.integers(0, 256, block, dtype=np.uint8).tobytes()
    ratio = estimate_file_entropy_ratio(data, block)
    assert ratio == pytest.approx(0.5, abs=2e-3)


def test_file_ratio_partial_final_block_uses_own_length(rng):
    # one full random block plus a short constant tail: the tail has H=0
    block = 4096
    data = rng.integers(0, 256, block, dtype=np.uint8).tobytes() + bytes(100)
    ratio = estimate_file_entropy_ratio(data, block)
    expected_bits = block_entropy(data[:block]) * block
    assert ratio == pytest.approx(expected_bits / 8 / len(data), abs=1e-12)


def test_file_ratio_errors():
    with pytest.raises(EmptyInputError):
        estimate_file_entropy_ratio(b"")
    with pytest.raises(ConfigError):
        estimate_file_entropy_ratio(b"xy", 0)


def test_block_size_validation():
    for good in (4096, 65536, 1 << 20):
        validate_block_size(good)
    for bad in (0, 1024, 4097, 100000, 2 << 20):
        with pytest.raises(ConfigError):
            validate_block_size(bad)
