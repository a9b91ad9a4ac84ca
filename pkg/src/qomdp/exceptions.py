"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A model or matrix failed a structural check.

    ``path`` locates the offending element (a JSON-path-like string such as
    ``$.channels.a1.kraus[0]``) when the error came from a model file.
    """

    def __init__(self, message, path=None, residual=None):
        self.path = path
        self.residual = residual
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class CapExceededError(RuntimeError):
    """An enumeration or cross-sum would exceed its configured size cap."""

    def __init__(self, message, size=None, cap=None):
        self.size = size
        self.cap = cap
        super().__init__(message)
