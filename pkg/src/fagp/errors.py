"""Exception types shared across the package."""

from __future__ import annotations


class BudgetError(RuntimeError):
    """Estimated memory for a feature expansion exceeds the configured cap."""

    def __init__(self, message, n_features=None, estimated_bytes=None, cap_bytes=None):
        super().__init__(message)
        self.n_features = n_features
        self.estimated_bytes = estimated_bytes
        self.cap_bytes = cap_bytes


class NumericalError(RuntimeError):
    """A numerical operation failed (factorization breakdown, non-finite values)."""

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class CsvFormatError(ValueError):
    """Malformed CSV input. ``line`` is 1-based; 0 means the file itself."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class ConfigError(ValueError):
    """Invalid key or value in a benchmark config file or CLI argument."""
