"""Exception types shared across the package.

Each carries the CLI exit code it maps to.
"""


class PoissonVQAError(Exception):
    exit_code = 1


class InputError(PoissonVQAError, ValueError):
    """Invalid argument or malformed input data."""

    exit_code = 2


class CapacityError(PoissonVQAError):
    """Requested object exceeds the dense-materialization cap."""

    exit_code = 3


class NumericalError(PoissonVQAError, ArithmeticError):
    """A numerical backend produced a non-finite or inconsistent result."""

    exit_code = 4

    def __init__(self, message, run=None):
        super().__init__(message)
        self.run = run
