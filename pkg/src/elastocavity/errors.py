"""Exception types raised across the package."""


class ElastoCavityError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ElastoCavityError, ValueError):
    """Invalid physical or run configuration."""


class NumericalDegeneracyError(ElastoCavityError, ArithmeticError):
    """A linear system or symbol is singular at the requested point."""


class PoleError(NumericalDegeneracyError):
    """The NtD symbol is evaluated where its denominator vanishes."""


class GeometryError(ElastoCavityError, ValueError):
    """Cavity shape or mesh violates its invariants."""


class DeformationError(GeometryError):
    """A mesh deformation inverted at least one triangle."""


class SolverError(ElastoCavityError, RuntimeError):
    """The discrete system could not be solved to tolerance."""


class StagnationError(ElastoCavityError, RuntimeError):
    """An iterative reconstruction stopped without meeting its target."""
