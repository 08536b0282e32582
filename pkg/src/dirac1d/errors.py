class DomainError(ValueError):
    """A mode or grid parameter lies outside the simulation domain."""


class ResolutionError(ValueError):
    """The spatial grid cannot resolve a harmonic of the requested fields."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or inconsistent."""
