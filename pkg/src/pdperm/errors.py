"""Exception hierarchy shared by every module."""


class PdpermError(Exception):
    """Base class for all package errors."""


class IngestionError(PdpermError):
    """An input file is missing or unreadable."""


class FormatError(IngestionError):
    """An input file is readable but malformed."""


class UnsupportedFormatError(FormatError):
    """An input uses a feature of its format that is not supported."""


class ParameterError(PdpermError, ValueError):
    """A parameter is outside its admissible range."""


class SamplingError(PdpermError):
    """Random sampling cannot proceed on the given input."""


class NumericError(PdpermError, ArithmeticError):
    """A numerical routine failed to converge or produced invalid output."""


class SolverError(NumericError):
    """An optimizer exhausted its iteration budget."""


class SchemaError(FormatError):
    """A staged file was written with an incompatible format version."""
