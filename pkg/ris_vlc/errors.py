"""Exceptions raised by ris_vlc."""


class RisVlcError(Exception):
    """Base class for ris_vlc errors."""


class GeometryError(RisVlcError, ValueError):
    """Raised when a geometric quantity is undefined (zero distance, bad angle)."""


class ConfigurationError(RisVlcError, ValueError):
    """Raised when physical parameters are mutually inconsistent."""


class TotalInternalReflectionError(RisVlcError, ValueError):
    """Raised when a refraction angle lies beyond the critical angle."""


class SingularIncidenceError(RisVlcError, ValueError):
    """Raised when the amplification gain is asked for at grazing incidence."""


class ContractViolation(RisVlcError, ValueError):
    """Raised when a caller breaks an input ordering or shape contract."""


class ConfigValidationError(RisVlcError):
    """Raised when a scenario file fails validation."""

    def __init__(self, message: str, path: tuple = ()):
        super().__init__(message)
        self.path = path


class OracleRefused(RisVlcError):
    """Raised when an exhaustive grid would be too large to evaluate."""
