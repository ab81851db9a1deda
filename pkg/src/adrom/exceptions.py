"""Exception types shared across the package.

Plain precondition violations (bad shapes, out-of-range arguments) raise
ValueError directly; the classes here mark conditions callers are expected
to branch on or that the command line maps to distinct exit codes.
"""


class ConfigError(ValueError):
    """Invalid configuration: unknown key, missing key, or violated invariant."""


class NumericalError(RuntimeError):
    """A numerical operation failed or produced an unusable result."""


class DegenerateUpdateError(NumericalError):
    """The update eigenproblem has a numerically zero right-hand matrix."""


class DegenerateSampleError(NumericalError):
    """The basis restricted to the sampling rows lost column rank."""


class DivergenceError(RuntimeError):
    """A time-stepping loop produced a non-finite state."""
