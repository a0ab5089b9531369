"""Exception hierarchy shared by every stage of the pipeline."""


class AtlasError(Exception):
    """Base class for all errors raised by reducing_atlas."""


class InputError(AtlasError, ValueError):
    """Malformed or out-of-domain input."""


class PreconditionError(AtlasError, ValueError):
    """An operation was called outside its admissible region."""


class ConfigurationError(AtlasError):
    """A tolerance, truncation or geometric setting cannot support the request."""


class NumericalError(AtlasError, ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""


class TrackingError(NumericalError):
    """Path continuation failed (step underflow or branch collision)."""


class ConsistencyError(AtlasError):
    """An internal invariant was violated; indicates an upstream bug."""


class UnsupportedError(AtlasError):
    """The input is valid but the requested computation is not implemented for it."""
