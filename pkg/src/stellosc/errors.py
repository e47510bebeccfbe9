"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration documents.

    The CLI maps this to exit code 2 (usage/IO error), as opposed to
    domain-check failures which are reported, not raised.
    """


class SolverError(RuntimeError):
    """Raised when a linear solve cannot be completed (singular matrix)."""
