"""Exception types raised by :mod:`chainbath`."""


class NumericalError(RuntimeError):
    """A linear-algebra step failed or produced an unusable result."""


class ConfigError(ValueError):
    """A run configuration is malformed; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
