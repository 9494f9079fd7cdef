class TriangleProcessError(Exception):
    """Base class for all errors raised by the simulation and analysis modules."""


class ArgumentError(TriangleProcessError, ValueError):
    """Bad vertex, edge or count argument."""


class DomainError(TriangleProcessError, ValueError):
    """Argument outside the range where a quantity is defined."""


class GuardExceededError(TriangleProcessError):
    """A guarded computation refused to run on an instance that is too large."""

    def __init__(self, message: str, estimate: int):
        super().__init__(f"{message} (size estimate: {estimate})")
        self.estimate = estimate


class ConfigError(TriangleProcessError, ValueError):
    """Invalid run configuration."""


class EmptyTrajectoryError(TriangleProcessError):
    """A report was requested for a trajectory without snapshots."""
