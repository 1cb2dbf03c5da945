"""Exception hierarchy.

Everything raised on purpose derives from MpcProfError so callers can catch
one type at the boundary. The subclasses map onto the three failure domains
the command line distinguishes: bad configuration or usage, malformed data,
and numeric breakdown during estimation.
"""


class MpcProfError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(MpcProfError, ValueError):
    """A config value or parameter combination is invalid."""


class FormatError(MpcProfError, ValueError):
    """A file (dataset, weight bundle, scenario) is malformed or inconsistent."""


class NumericError(MpcProfError, RuntimeError):
    """A numeric procedure failed (non-finite values, zero-energy input, ...)."""


class EstimationError(NumericError):
    """Estimation could not produce a usable result (rank loss, no signal)."""


class TrackLostError(EstimationError):
    """Tracking target has no usable energy; the track cannot continue."""
