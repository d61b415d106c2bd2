"""Exception types raised across the package."""


class FiissError(Exception):
    """Base class for all package errors."""


class DomainError(FiissError, ValueError):
    """An argument lies outside the domain of an operation."""


class RangeError(FiissError, ValueError):
    """A query falls outside the simulated reach of a path or sequence."""


class WindowError(FiissError, ValueError):
    """A fitting window is not resolvable by the sample."""


class ResourceCapError(FiissError, RuntimeError):
    """A simulation would exceed its configured size cap."""
