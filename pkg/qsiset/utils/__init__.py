# Utils Package
from .config import Config
from .errors import ArgumentError, ConsistencyError, DomainError, QsiSetError, ResourceLimitError

__all__ = ["Config", "QsiSetError", "ArgumentError", "DomainError", "ResourceLimitError", "ConsistencyError"]
