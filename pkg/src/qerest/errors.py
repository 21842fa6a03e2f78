"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration. Carries the full list of violations found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class CacheError(RuntimeError):
    """Cache directory contents are unreadable or fail their checksums."""


class NumericalError(RuntimeError):
    """A numerical routine left its domain of validity (with diagnostic)."""


class BounceLimitError(RuntimeError):
    """The flow exceeded the per-call reflection budget."""
