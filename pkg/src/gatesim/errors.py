"""Exception types shared across the package."""


class GateSimError(Exception):
    """Base class for every error raised by this package."""


class ParseError(GateSimError):
    """Malformed input document; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(GateSimError):
    """A value violates one of the documented invariants."""


class ConfigError(GateSimError):
    """Missing or inconsistent configuration."""


class GeometryError(GateSimError):
    """Degenerate geometric configuration (zero direction, parallel axes, ...)."""


class PlacementError(GateSimError):
    """Scene randomization could not satisfy the spacing constraints."""


class IngestionError(GateSimError):
    """Background or pose-log ingestion failed; names the offending row or file."""
