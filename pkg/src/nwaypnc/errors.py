class PncError(Exception):
    """Base class for toolkit errors."""


class InvalidParameter(PncError, ValueError):
    pass


class GuardExceeded(PncError):
    """A brute-force computation would exceed the configured size limit."""


class NonRemovableConstraint(PncError):
    """A constraint group forces two cells sharing a coordinate into one cluster."""

    def __init__(self, message, coordinate=None, cells=None):
        super().__init__(message)
        self.coordinate = coordinate
        self.cells = cells


class MapParseError(PncError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
