"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical non-convergence exits 3, internal invariant violations exit 4.
"""


class JmgtError(Exception):
    """Base class for all package errors."""


class ConfigError(JmgtError, ValueError):
    """Invalid configuration: bad parameter values, sizes out of range."""


class ContractError(JmgtError, ValueError):
    """Caller violated an API contract (shape mismatch, bad support mask)."""


class DomainError(JmgtError, ValueError):
    """Operation evaluated outside its validity region (e.g. asymptotics)."""


class QuadratureError(JmgtError, ValueError):
    """Quadrature cannot run with the supplied sampling."""


class ConvergenceError(JmgtError, RuntimeError):
    """Iterative or adaptive computation failed to converge."""


class DiagnosticError(JmgtError, RuntimeError):
    """Computation failed with attached diagnostic payload."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
