"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI reports for it.
"""


class IsingLabError(Exception):
    exit_code = 1


class InvalidInputError(IsingLabError, ValueError):
    """Malformed graph, parameters out of range, or an incompatible pairing of arguments."""

    exit_code = 2


class InfeasibleParameterError(InvalidInputError):
    pass


class TerminalExhaustionError(InvalidInputError):
    pass


class CapacityError(IsingLabError):
    """Instance too large for exhaustive enumeration."""

    exit_code = 3


class RegimeError(IsingLabError):
    """Parameters outside the regime where the requested algorithm is defined."""

    exit_code = 4


class SamplerError(IsingLabError):
    exit_code = 5


class ConvergenceError(SamplerError):
    pass


class ConstructionError(SamplerError):
    """Randomized construction gave up after its attempt budget."""
