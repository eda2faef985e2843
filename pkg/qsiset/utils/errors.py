"""
Error types raised by the services and mapped to CLI exit codes.

Every error carries the exit code the command line returns when it escapes a
command handler:

    ArgumentError       2   malformed input, out-of-range parameter
    DomainError         3   estimate used outside its regime, model not summable
    ResourceLimitError  4   member / state / dilation ceiling exceeded
    ConsistencyError    5   Ehrhart verification or oracle mismatch
"""


class QsiSetError(Exception):
    """Base class for all errors raised by qsiset"""
    exit_code = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        return {
            'error': type(self).__name__,
            'message': self.message,
            'exit_code': self.exit_code,
            'details': self.details,
        }


class ArgumentError(QsiSetError, ValueError):
    exit_code = 2


class DomainError(QsiSetError):
    """Raised when an operation is called outside the regime it is valid in"""
    exit_code = 3


class ResourceLimitError(QsiSetError):
    """Raised when a configured ceiling would be exceeded.

    `ceiling` names the Config attribute, `limit` its value, and
    `best_estimate` carries whatever partial answer was available.
    """
    exit_code = 4

    def __init__(self, message, ceiling=None, limit=None, best_estimate=None, **details):
        super().__init__(message, ceiling=ceiling, limit=limit, **details)
        self.ceiling = ceiling
        self.limit = limit
        self.best_estimate = best_estimate


class ConsistencyError(QsiSetError):
    exit_code = 5


def reason_code(exc):
    """Short machine-readable reason for per-cell CSV reporting"""
    if isinstance(exc, QsiSetError):
        name = type(exc).__name__.replace('Error', '').lower()
        tag = exc.details.get('reason')
        return f"{name}_{tag}" if tag else name
    return type(exc).__name__.lower()
