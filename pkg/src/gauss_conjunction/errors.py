"""Exceptions for numerical failures.

Precondition violations raise ``ValueError``; failures of an otherwise valid
computation raise a ``NumericalError`` subclass.
"""


class NumericalError(RuntimeError):
    """A well-posed computation failed numerically."""


class QuadratureError(NumericalError):
    def __init__(self, message, error_estimate):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3g})")
        self.error_estimate = error_estimate


class CholeskyError(NumericalError):
    def __init__(self, message, jitter):
        super().__init__(message)
        self.jitter = jitter
