"""Shared domain types: element formats and the buffers the codec moves around.

All buffers hold raw little-endian element bytes (byte index 0 of an element
is its least significant byte). The codec never interprets float values; the
format descriptions below exist so analysis code and stream headers agree on
widths and bit positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import AlignmentError, ShapeMismatchError


class ElementType(Enum):
    """Element formats understood by the codec.

    The value tuple is (wire code, width in bytes). RAW8 means "no element
    structure": byte-grouping degenerates to the identity.
    """

    RAW8 = (0, 1)
    BF16 = (1, 2)
    FP16 = (2, 2)
    FP32 = (3, 4)

    @property
    def code(self) -> int:
        return self.value[0]

    @property
    def width(self) -> int:
        return self.value[1]

    @classmethod
    def from_code(cls, code: int) -> "ElementType":
        for et in cls:
            if et.code == code:
                return et
        raise ValueError(f"unknown element type code {code}")

    @classmethod
    def from_name(cls, name: str) -> "ElementType":
        aliases = {
            "raw": cls.RAW8,
            "raw8": cls.RAW8,
            "bf16": cls.BF16,
            "bfloat16": cls.BF16,
            "fp16": cls.FP16,
            "float16": cls.FP16,
            "fp32": cls.FP32,
            "float32": cls.FP32,
        }
        try:
            return aliases[name.lower()]
        except KeyError:
            raise ValueError(f"unknown element type name {name!r}") from None


@dataclass(frozen=True)
class FloatLayout:
    """Bit layout of a floating point format (sign is always the top bit)."""

    sign_bits: int
    exponent_bits: int
    mantissa_bits: int

    @property
    def total_bits(self) -> int:
        return self.sign_bits + self.exponent_bits + self.mantissa_bits


# Standard layouts for the supported formats. bfloat16 keeps float32's
# 8-bit exponent and truncates the mantissa to 7 bits, so bf16 bit 14 is the
# exponent MSB and bit 15 the sign, mirroring float32 bits 30 and 31.
FLOAT_LAYOUTS: dict[ElementType, FloatLayout] = {
    ElementType.BF16: FloatLayout(1, 8, 7),
    ElementType.FP16: FloatLayout(1, 5, 10),
    ElementType.FP32: FloatLayout(1, 8, 23),
}


def _check_alignment(n: int, element_type: ElementType) -> None:
    if n % element_type.width != 0:
        raise AlignmentError(
            f"buffer of {n} bytes is not a multiple of "
            f"{element_type.name} width {element_type.width}"
        )


@dataclass(frozen=True)
class TensorBuffer:
    """One tensor shard at one step: raw bytes plus element type."""

    data: bytes
    element_type: ElementType

    def __post_init__(self) -> None:
        _check_alignment(len(self.data), self.element_type)

    @property
    def element_count(self) -> int:
        return len(self.data) // self.element_type.width

    def __len__(self) -> int:
        return len(self.data)


@dataclass(frozen=True)
class GroupedBuffer:
    """Byte-grouped layout of a :class:`TensorBuffer`.

    Group g (0 <= g < width) occupies bytes
    [g * element_count, (g + 1) * element_count); byte j of group g is byte g
    of source element j. Groups are emitted least significant byte first.
    """

    data: bytes
    element_type: ElementType
    element_count: int

    def __post_init__(self) -> None:
        expected = self.element_count * self.element_type.width
        if len(self.data) != expected:
            raise ShapeMismatchError(
                f"grouped buffer holds {len(self.data)} bytes, "
                f"expected {expected} for {self.element_count} "
                f"{self.element_type.name} elements"
            )

    def group(self, g: int) -> bytes:
        if not 0 <= g < self.element_type.width:
            raise IndexError(f"group {g} out of range")
        n = self.element_count
        return self.data[g * n : (g + 1) * n]

    def __len__(self) -> int:
        return len(self.data)


@dataclass(frozen=True)
class DeltaBuffer:
    """Bytewise XOR of two equal-shape buffers at consecutive steps."""

    data: bytes
    element_type: ElementType
    step_from: int
    step_to: int

    def __post_init__(self) -> None:
        _check_alignment(len(self.data), self.element_type)
        if self.step_to != self.step_from + 1:
            raise ValueError(
                f"delta steps must be consecutive, got "
                f"{self.step_from} -> {self.step_to}"
            )

    def to_tensor(self) -> TensorBuffer:
        return TensorBuffer(self.data, self.element_type)

    def __len__(self) -> int:
        return len(self.data)
