"""lmc: lossless block-adaptive compression for LLM checkpoint tensors.

The codec pipeline is XOR delta (optional, between checkpoint steps), then
byte-grouping (optional, per buffer window), then per-block entropy coding
where every 64 KiB block independently picks the cheapest of canonical
Huffman, run-length (monosymbolic blocks) or stored. A segmented container
format makes both directions data-parallel.
"""

from .bytegroup import byte_group, byte_ungroup
from .delta import xor_apply, xor_delta
from .entropy import (
    DEFAULT_BLOCK_SIZE,
    ByteHistogram,
    entropy,
    estimate_file_entropy_ratio,
    histogram,
)
from .errors import (
    AlignmentError,
    ConfigError,
    CorruptStreamError,
    DtypeMismatchError,
    EmptyInputError,
    IntegrityError,
    LmcError,
    MalformedCodebookError,
    MissingSymbolError,
    ShapeMismatchError,
    UnsupportedFormatError,
)
from .huffman import (
    BlockCodebook,
    CanonicalCodes,
    assign_canonical,
    build_codebook,
    decode_block,
    encode_block,
)
from .parallel import BenchRow, plmc_compress, plmc_decompress, throughput_bench
from .stream import (
    DEFAULT_BUFFER_SIZE,
    CodeStreamHeader,
    compress_buffer,
    decompress_buffer,
    lmc_compress,
    lmc_decompress,
    parse_header,
)
from .types import DeltaBuffer, ElementType, GroupedBuffer, TensorBuffer

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BenchRow",
    "BlockCodebook",
    "ByteHistogram",
    "CanonicalCodes",
    "CodeStreamHeader",
    "ConfigError",
    "CorruptStreamError",
    "DEFAULT_BLOCK_SIZE",
    "DEFAULT_BUFFER_SIZE",
    "DeltaBuffer",
    "DtypeMismatchError",
    "ElementType",
    "EmptyInputError",
    "GroupedBuffer",
    "IntegrityError",
    "LmcError",
    "MalformedCodebookError",
    "MissingSymbolError",
    "ShapeMismatchError",
    "TensorBuffer",
    "UnsupportedFormatError",
    "assign_canonical",
    "build_codebook",
    "byte_group",
    "byte_ungroup",
    "compress_buffer",
    "decode_block",
    "decompress_buffer",
    "encode_block",
    "entropy",
    "estimate_file_entropy_ratio",
    "histogram",
    "lmc_compress",
    "lmc_decompress",
    "parse_header",
    "plmc_compress",
    "plmc_decompress",
    "throughput_bench",
    "xor_apply",
    "xor_delta",
]
