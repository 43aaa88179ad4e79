"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when a scenario or sampling configuration is infeasible."""


class ProtocolError(ValueError):
    """Raised on topology inconsistencies or invalid cooperation messages."""
