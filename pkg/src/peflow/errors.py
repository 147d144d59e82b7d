"""Exception hierarchy shared by the solver modules."""


class PeflowError(Exception):
    """Base class for all errors raised by peflow."""


class DomainError(PeflowError, ValueError):
    """An argument lies outside the domain of a function (e.g. non-finite x)."""


class ValidationError(PeflowError, ValueError):
    """Input data violates a structural invariant."""


class ArgumentError(PeflowError, ValueError):
    """Inconsistent call arguments (e.g. ``a > b`` for an interval)."""


class IntegrationError(PeflowError, FloatingPointError):
    """The integrator produced non-finite values.

    The offending state is attached as ``state`` for post-mortem inspection.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class TruncationError(PeflowError, RuntimeError):
    """The step budget ran out before the horizon was reached.

    ``partial`` holds the trajectory integrated so far.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
