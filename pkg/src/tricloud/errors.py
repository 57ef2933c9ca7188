"""Exception types shared across the tricloud package."""


class TricloudError(Exception):
    """Base class for all tricloud errors."""


class ParameterError(TricloudError):
    """Invalid codec/generator parameter (depth, upsample factor, stepsize...)."""


class ConsistencyError(TricloudError):
    """A frame or group of frames violates a structural invariant."""


class RangeError(TricloudError):
    """A coordinate or code is outside its declared domain."""


class EmptySetError(TricloudError):
    """An operation that needs a non-empty point/voxel set got an empty one."""


class ShapeMismatchError(TricloudError):
    """Metric inputs do not have matching shapes or correspondence."""


class StreamError(TricloudError):
    """Base class for bitstream parsing problems."""


class CorruptStreamError(StreamError):
    """Impossible codeword, bad count, or otherwise undecodable payload."""


class TruncatedStreamError(StreamError):
    """The stream ended before a complete structure could be parsed."""


class TrailingBytesError(StreamError):
    """Bytes remain after a structure that should consume the whole stream."""


class MalformedIndexMapError(TricloudError):
    """A duplicate-index map is not a nondecreasing 0/1-step sequence from 0."""


class FormatError(TricloudError):
    """Wrong magic number or unsupported container/file version."""
