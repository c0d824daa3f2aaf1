"""Exception hierarchy shared by all modules."""


class FreeOTError(Exception):
    """Base class for library errors."""


class DomainError(FreeOTError, ValueError):
    """An argument lies outside the region where the operation is defined."""


class ConvergenceError(FreeOTError, RuntimeError):
    """An iterative solver stopped before meeting its tolerance.

    ``diagnostics`` carries whatever state the solver had when it gave up.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class BracketError(ConvergenceError):
    """No sign change was found for a scalar root-find."""


class InvariantError(FreeOTError, RuntimeError):
    """A computed solution failed its own post-condition check."""


class NotRealRootedError(FreeOTError, ValueError):
    """Root isolation found fewer real roots than the polynomial degree."""
