"""Exception types shared across the package."""


class SusyOscError(Exception):
    """Base class for everything raised deliberately by this package."""


class DomainError(SusyOscError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class SeriesError(SusyOscError, ArithmeticError):
    """A power series failed to converge within the iteration cap."""

    def __init__(self, message, *, terms_used=None, partial_sum=None):
        super().__init__(message)
        self.terms_used = terms_used
        self.partial_sum = partial_sum


class QuadratureError(SusyOscError, ArithmeticError):
    """Adaptive quadrature failed to converge within the node cap."""

    def __init__(self, message, *, nodes_used=None, last_estimate=None, last_change=None):
        super().__init__(message)
        self.nodes_used = nodes_used
        self.last_estimate = last_estimate
        self.last_change = last_change


class InvalidSpecError(SusyOscError, ValueError):
    """System parameters violate a constraint of the construction."""


class SingularPotentialError(SusyOscError):
    """The seed Wronskian vanishes somewhere on the grid."""


class ConstructionError(SusyOscError):
    """A constructed state failed one of its defining checks."""


class InsufficientSupportError(SusyOscError):
    """Too few usable grid points remain after masking."""


class TruncationError(SusyOscError):
    """A coefficient expansion was cut before its tail bound was met."""

    def __init__(self, message, *, required=None, cap=None):
        super().__init__(message)
        self.required = required
        self.cap = cap


class UsageError(SusyOscError, ValueError):
    """Malformed request at the command-line layer."""
