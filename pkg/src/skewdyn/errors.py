class PreconditionError(ValueError):
    """An operation's stated precondition does not hold for the inputs."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or meet its tolerance."""
