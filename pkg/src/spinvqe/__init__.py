"""Statevector VQE/SSVQE toolkit for spin chains with symmetry handling."""

from .errors import ConfigurationError, ValidationError

__all__ = ["ConfigurationError", "ValidationError"]
__version__ = "0.1.0"
