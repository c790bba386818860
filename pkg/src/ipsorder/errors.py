"""Exception hierarchy shared by every module of the package."""


class IPSError(Exception):
    """Base class for all package errors."""


class DomainError(IPSError):
    """A change is not admissible from the given configuration."""


class WindowMismatch(IPSError):
    """Two configurations are compared over different site windows."""


class WindowTooSmall(IPSError):
    """A query needs the value of a site that lies outside the window."""


class ParameterMismatch(IPSError):
    """Two parameter sets disagree on a structural constant (N, M, N_A, d)."""


class NotDiagonal(IPSError):
    """A migration matrix was expected to be diagonal but is not."""


class MalformedNetwork(IPSError):
    """A flow network violates a structural invariant."""


class Infeasible(IPSError):
    """A flow problem has no solution.

    The violating cut, when known, is kept on ``certificate``.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class TooLarge(IPSError):
    """A brute-force enumeration would exceed its hard size limit."""


class ExplosionGuard(IPSError):
    """A window enumeration would exceed the configured evaluation budget."""


class NegativeResidual(IPSError):
    """An uncoupled residual rate of the coupling generator came out negative."""


class OrderViolation(IPSError):
    """A coupled trajectory left the ordered region."""

    def __init__(self, message, time=None, event=None):
        super().__init__(message)
        self.time = time
        self.event = event


class ModelFileError(IPSError):
    """A model specification file could not be parsed."""
