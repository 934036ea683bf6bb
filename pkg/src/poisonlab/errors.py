"""Exception hierarchy shared by all poisonlab modules.

Exit-code mapping used by the CLI: ConfigurationError (and subclasses)
terminate with code 2, NumericError with code 3.
"""


class PoisonLabError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(PoisonLabError):
    """Invalid configuration, precondition violation, or bad input file."""


class ShapeError(ConfigurationError):
    """Tensor shape or dimensionality mismatch."""


class UnsupportedInputError(ConfigurationError):
    """Operation undefined for this input modality (e.g. input gradients of token sequences)."""


class SchemaError(ConfigurationError):
    """Persisted report/file does not match the expected schema."""


class InvariantViolation(PoisonLabError):
    """Internal invariant broken (e.g. out-of-order epoch recording)."""


class NumericError(PoisonLabError):
    """Non-finite loss or gradient encountered; the run is aborted."""
