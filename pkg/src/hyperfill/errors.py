"""Exception hierarchy shared by the library and the command line front end."""


class HyperfillError(Exception):
    """Base class for errors raised by hyperfill."""


class ConfigError(HyperfillError):
    """Malformed descriptors, out-of-range sizes, or invalid run configuration."""


class GateError(HyperfillError):
    """A mathematical hypothesis required by an operation does not hold.

    Raised when parameters fall outside an admissible window, a subset fails
    a porosity requirement, or an operation is asked to run outside the
    regime it is defined in.
    """


class NumericalError(HyperfillError):
    """An iterative routine failed to reach its declared tolerance."""
