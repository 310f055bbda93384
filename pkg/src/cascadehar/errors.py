"""Exception hierarchy shared across the engine."""


class CascadeHarError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CascadeHarError, ValueError):
    """An argument lies outside the domain of an operation."""


class RateError(DomainError):
    """A requested sampling rate cannot be derived from the source rate."""


class StateError(CascadeHarError, RuntimeError):
    """An operation was invoked on an object in the wrong state."""


class SpecError(CascadeHarError):
    """A cascade description is structurally invalid."""


class ConfigError(CascadeHarError):
    """A run configuration is invalid or inconsistent."""


class IngestionError(CascadeHarError):
    """A dataset file could not be parsed or validated."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
