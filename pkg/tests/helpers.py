"""Independent reference implementations used as oracles.

Everything here is deliberately naive and bit-by-bit so it shares no code
path (and no clever indexing) with the package under test.
"""

from __future__ import annotations

import math


def optimal_prefix_cost(counts: list[int]) -> int:
    """Minimum total bits of any prefix code, by brute-force enumeration.

    Enumerates every nondecreasing length vector satisfying the Kraft
    inequality and pairs the largest counts with the shortest lengths.
    Lengths are capped at n-1, the deepest any optimal prefix code over n
    symbols can be; a single symbol costs length 1. Kraft feasibility is
    tracked in exact integer units of 2^-(n-1).
    """
    n = len(counts)
    if n == 0:
        raise ValueError("need at least one symbol")
    if n == 1:
        return counts[0]
    ordered = sorted(counts, reverse=True)
    max_len = n - 1
    whole = 1 << max_len
    best = math.inf

    def recurse(i: int, prev_len: int, budget: int, cost: int) -> None:
        nonlocal best
        if cost >= best:
            return
        if i == n:
            best = cost
            return
        remaining_min = n - i - 1  # each later symbol needs >= one unit
        for length in range(prev_len, max_len + 1):
            unit = 1 << (max_len - length)
            if unit > budget - remaining_min:
                continue
            recurse(i + 1, length, budget - unit, cost + ordered[i] * length)

    recurse(0, 1, whole, 0)
    assert best < math.inf
    return int(best)


def all_length_vectors(n: int) -> list[tuple[int, ...]]:
    """All nondecreasing Kraft-feasible length vectors for n symbols."""
    if n == 1:
        return [(1,)]
    out: list[tuple[int, ...]] = []
    max_len = n - 1
    whole = 1 << max_len

    def recurse(prefix: list[int], budget: int) -> None:
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        start = prefix[-1] if prefix else 1
        remaining_min = n - len(prefix) - 1
        for length in range(start, max_len + 1):
            unit = 1 << (max_len - length)
            if unit > budget - remaining_min:
                continue
            prefix.append(length)
            recurse(prefix, budget - unit)
            prefix.pop()

    recurse([], whole)
    return out


def ref_canonical_codes(lengths: dict[int, int]) -> dict[int, str]:
    """Canonical code assignment as bit strings, textbook next_code loop."""
    if not lengths:
        return {}
    max_len = max(lengths.values())
    bl_count = [0] * (max_len + 1)
    for length in lengths.values():
        bl_count[length] += 1
    next_code = [0] * (max_len + 2)
    code = 0
    for bits in range(1, max_len + 1):
        code = (code + bl_count[bits - 1]) << 1
        next_code[bits] = code
    codes = {}
    for sym in sorted(lengths):
        length = lengths[sym]
        codes[sym] = format(next_code[length], f"0{length}b")
        next_code[length] += 1
    return codes


def ref_encode(block: bytes, codes: dict[int, str]) -> tuple[bytes, int]:
    """Bit-by-bit MSB-first packing of the given code strings."""
    bits = "".join(codes[b] for b in block)
    padded = bits + "0" * (-len(bits) % 8)
    data = bytes(int(padded[i : i + 8], 2) for i in range(0, len(padded), 8))
    return data, len(bits)


def ref_decode(
    data: bytes, bit_length: int, lengths: dict[int, int], out_len: int
) -> bytes:
    """Bit-by-bit canonical decode; raises ValueError on any corruption."""
    codes = ref_canonical_codes(lengths)
    table = {v: k for k, v in codes.items()}
    max_len = max(lengths.values()) if lengths else 0
    bits = "".join(format(byte, "08b") for byte in data)[:bit_length]
    out = bytearray()
    pos = 0
    while len(out) < out_len:
        for take in range(1, max_len + 1):
            candidate = bits[pos : pos + take]
            if len(candidate) < take:
                raise ValueError("bit exhaustion")
            if candidate in table:
                out.append(table[candidate])
                pos += take
                break
        else:
            raise ValueError("invalid prefix")
    if pos != bit_length:
        raise ValueError("trailing bits")
    return bytes(out)
