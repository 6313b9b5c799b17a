"""Exception hierarchy shared by all modules."""


class SetclashError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(SetclashError, ValueError):
    """Vectors or tuples with incompatible shapes."""


class DomainError(SetclashError, ValueError):
    """Argument outside the domain of a function (e.g. negative gauge input)."""


class ValidationError(SetclashError, ValueError):
    """Malformed object: empty set description, non-monotone gauge, bad weights."""


class UnsupportedMethodError(SetclashError):
    """Requested method does not apply to the given sets."""


class PreconditionError(SetclashError):
    """A hypothesis of the operation does not hold.

    Parameters
    ----------
    message : str
    inequality : str, optional
        Tag of the violated inequality, e.g. ``"T12-1"``.
    """

    def __init__(self, message, inequality=None):
        if inequality is not None and not message.startswith(inequality):
            message = f"{inequality} violated: {message}"
        super().__init__(message)
        self.inequality = inequality
