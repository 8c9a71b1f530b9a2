"""Exception types shared across the package."""


class Eeg2d3dError(Exception):
    """Base class for package errors."""


class DataError(Eeg2d3dError):
    """Malformed or inconsistent input data (files, shapes, labels)."""


class NumericalError(Eeg2d3dError):
    """A numerical procedure failed (non-convergence, degenerate input)."""
