"""Exception hierarchy.

Errors are split into two families so callers (notably the CLI) can map
them onto exit codes: :class:`FormatError` for anything raised while
reading or writing files, :class:`ComputationError` for failures inside
the segmentation pipeline.
"""


class FISRGError(Exception):
    """Base class for every error raised by this package."""


class FormatError(FISRGError):
    """Raised when a file cannot be parsed or written."""


class MalformedHeader(FormatError):
    pass


class UnsupportedDatatype(FormatError):
    pass


class UnsupportedFormat(FormatError):
    pass


class DecodeError(FormatError):
    pass


class ComputationError(FISRGError, ValueError):
    """Raised for invalid inputs or unsatisfiable requests in the pipeline."""


class DimensionMismatch(ComputationError):
    pass


class IndexOutOfRange(ComputationError, IndexError):
    pass


class ShapeOutOfBounds(ComputationError):
    pass


class NonPositiveSigma(ComputationError):
    pass


class EmptyRoi(ComputationError):
    pass


class InvalidK(ComputationError):
    pass


class NoValidSeeds(ComputationError):
    pass


class SeedOutOfBounds(ComputationError):
    pass


class EmptySeedSet(ComputationError):
    pass


class KernelOrderViolation(ComputationError):
    pass


class EmptyGrid(ComputationError):
    pass


class TruncatedPayload(DimensionMismatch, FormatError):
    """A file holds fewer bytes than its header declares."""
