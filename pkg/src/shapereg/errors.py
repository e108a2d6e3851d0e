"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An input violates a documented precondition."""


class UnsupportedOperation(ValueError):
    """The requested operation is not defined for this cone variant."""


class ConvergenceFailure(RuntimeError):
    """An iterative solver stopped without an optimality certificate.

    Parameters
    ----------
    message : str
        Human readable reason.
    iterate : ndarray, optional
        Best iterate available when the solver stopped.
    residuals : dict, optional
        Diagnostic residuals at ``iterate``.
    """

    def __init__(self, message, iterate=None, residuals=None):
        super().__init__(message)
        self.iterate = iterate
        self.residuals = dict(residuals or {})
