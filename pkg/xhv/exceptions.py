"""The module contains the exception hierarchy shared by all the modules."""


class XHVError(Exception):
    """The base class for all the errors raised by the package."""


class ValidationError(XHVError):
    """Raised when the input data is malformed or violates an invariant."""


class ComputationError(XHVError):
    """Raised when a computation fails to converge or cannot produce a result."""
