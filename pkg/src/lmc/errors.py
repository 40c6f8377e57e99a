"""Exception hierarchy for the lmc package.

Every error raised by this package derives from :class:`LmcError` so callers
can catch one base class. The CLI maps these onto stable exit codes.
"""


class LmcError(Exception):
    """Base class for all lmc errors."""


class AlignmentError(LmcError):
    """Buffer length is not a multiple of the element width."""


class ShapeMismatchError(LmcError):
    """Two buffers that must have equal length do not."""


class DtypeMismatchError(LmcError):
    """Two buffers that must share an element type do not."""


class EmptyInputError(LmcError):
    """An operation that needs at least one byte/symbol got none."""


class MalformedCodebookError(LmcError):
    """Code lengths violate the Kraft inequality or the length limit."""


class MissingSymbolError(LmcError):
    """A block contains a byte value with no code in the codebook."""


class CorruptStreamError(LmcError):
    """Compressed stream is structurally invalid (truncated, bad mode, ...)."""


class UnsupportedFormatError(LmcError):
    """Stream magic or version is not recognized."""


class IntegrityError(LmcError):
    """Decoded payload failed its checksum."""


class ConfigError(LmcError):
    """Invalid option value (block size, codec name, segment count, ...)."""


class MissingStreamError(LmcError):
    """A checkpoint chain references a stream file or step that is absent."""
