"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes (config=1, ingest=2, fit=3,
inference=4); library callers can catch ``GarchsupError`` to get everything.
"""


class GarchsupError(Exception):
    """Base class for all package errors."""


class ConfigError(GarchsupError):
    """Invalid parameters, grids, windows, or CLI configuration."""


class IngestError(GarchsupError):
    """Unreadable or unusable input data."""


class FitError(GarchsupError):
    """Quasi-likelihood optimization failed or input is unfit for QMLE."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InferenceError(GarchsupError):
    """Covariance estimation or test assembly failed (e.g. singular V)."""


class SimulationOverflowError(GarchsupError):
    """The simulated variance recursion left the representable range."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"sigma^2 overflowed at observation index {index}")
