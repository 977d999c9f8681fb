"""Exception hierarchy.

Every error carries a short machine-readable ``code`` and the process exit
status the CLI should use when the error escapes a subcommand.
"""


class VerifError(Exception):
    code = "error"
    exit_status = 1


class ArgumentError(VerifError, ValueError):
    code = "bad_argument"
    exit_status = 2


class ShapeError(ArgumentError):
    code = "shape_mismatch"


class CoverageError(VerifError, LookupError):
    code = "missing_coverage"
    exit_status = 3


class DegeneracyError(VerifError, ArithmeticError):
    code = "numeric_degeneracy"
    exit_status = 4


class FormatError(VerifError):
    """Base class for unreadable GF1 files."""

    code = "bad_format"
    exit_status = 2


class BadMagicError(FormatError):
    code = "bad_magic"


class TruncatedHeaderError(FormatError):
    code = "truncated_header"


class HeaderError(FormatError):
    code = "bad_header"


class SizeMismatchError(FormatError):
    code = "size_mismatch"
