"""Exception types shared across the package."""


class StatMenusError(Exception):
    """Base class for all package-specific errors."""


class InvalidModelError(StatMenusError, ValueError):
    """A test model violates its structural requirements."""


class UnsupportedModelError(StatMenusError, TypeError):
    """An operation is undefined for the given model kind."""


class InvalidPotentialError(StatMenusError, ValueError):
    """A candidate potential fails the convexity/participation conditions."""


class InfeasibleMenuError(StatMenusError, RuntimeError):
    """A requested menu construction is infeasible.

    Attributes carry the quantitative reason when one exists, e.g. ``bound``
    for an elicitable-range violation or ``interval`` for an empty cost
    interval in the finite recursion.
    """

    def __init__(self, message, *, bound=None, interval=None):
        super().__init__(message)
        self.bound = bound
        self.interval = interval


class ConfigError(StatMenusError, ValueError):
    """A run configuration failed validation.

    ``errors`` is a list of ``(json_pointer, message)`` pairs.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = "; ".join(f"{ptr}: {msg}" for ptr, msg in self.errors)
        super().__init__(f"invalid configuration: {lines}")
