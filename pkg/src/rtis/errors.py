"""Exception types shared across the package."""


class RtisError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RtisError, ValueError):
    """Invalid configuration value."""


class PreconditionError(RtisError, ValueError):
    """An operation was called with inputs outside its domain."""


class UsageError(RtisError, RuntimeError):
    """An object was used in a state that does not allow the call."""


class ProviderUnavailable(RtisError, RuntimeError):
    """A resource provider cannot be read on this host."""


class TrialFormatError(RtisError, ValueError):
    """A trial log is malformed, truncated or inconsistent with its peers."""
