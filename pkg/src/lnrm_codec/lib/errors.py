"""Exception hierarchy shared by the codec, metrics and evaluation packages."""
from typing import Optional


class CodecError(Exception):
    """Root of every error raised by lnrm_codec."""


class FormatError(CodecError):
    """
    A file or bitstream does not follow its format.

    Attributes:
        offset: Byte offset where decoding failed, when known.
    """
    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class LengthError(FormatError):
    """Payload ended before the declared amount of data was read."""


class AlignmentError(CodecError):
    """Frame dimensions are not multiples of the macroblock size."""


class GradientValueError(CodecError, ValueError):
    """Gradient values are not finite."""


class ContractError(CodecError, ValueError):
    """A caller broke a function precondition (sizes, ranges, layouts)."""


class ConfigurationError(CodecError):
    """The RDO configuration cannot be finalized for this frame."""


class RangeError(CodecError):
    """Two RD curves do not share a usable distortion range."""


class UnsupportedMetricError(CodecError, NotImplementedError):
    """The metric cannot perform the requested evaluation."""
