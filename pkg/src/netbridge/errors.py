"""Exception hierarchy shared by the library and the command line."""


class NetbridgeError(Exception):
    """Base class for all errors raised by this package."""


class GraphParseError(NetbridgeError, ValueError):
    """A graph document could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphValidationError(NetbridgeError, ValueError):
    """A graph violates a structural invariant (range, duplicates, costs)."""


class DomainError(NetbridgeError, ValueError):
    """An argument lies outside the domain of an operation."""


class PreconditionError(NetbridgeError, ValueError):
    """A documented precondition (e.g. primitivity) does not hold."""


class InfeasibleError(NetbridgeError):
    """No admissible transport exists for the requested marginals.

    ``state`` is the 0-based index of a violating node when known, and
    ``path_count`` the relevant entry of M^N.
    """

    def __init__(self, message, state=None, path_count=None):
        self.state = state
        self.path_count = path_count
        super().__init__(message)


class ConvergenceError(NetbridgeError):
    """An iteration hit its iteration cap before meeting its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class CapacityError(NetbridgeError):
    """A brute-force routine was asked to exceed its enumeration bound."""
