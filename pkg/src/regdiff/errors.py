"""Exception types raised by regdiff.

``DataError`` subclasses describe problems with the supplied data; the CLI
maps them to exit code 3. ``ConfigError`` subclasses describe invalid
arguments and map to exit code 2.
"""


class RegDiffError(Exception):
    """Base class for all regdiff errors."""


class DataError(RegDiffError, ValueError):
    pass


class ConfigError(RegDiffError, ValueError):
    pass


class MissingValue(DataError):
    pass


class NonPositiveLog(DataError):
    pass


class BadHeader(DataError):
    pass


class TooFewRows(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class SingularDesign(DataError):
    pass


class DegenerateVariance(DataError):
    """Every residual-kernel product vanished, so the statistic cannot be studentized."""


class OutOfRange(ConfigError):
    pass


class BadDimension(ConfigError):
    pass


class DegenerateBandwidth(UserWarning):
    """Median pairwise distance was zero and a fallback bandwidth was used."""
