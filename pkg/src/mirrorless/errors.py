"""Exception hierarchy."""


class MirrorlessError(Exception):
    pass


class InvalidArgumentError(MirrorlessError, ValueError):
    pass


class DivisionDomainError(MirrorlessError, ZeroDivisionError):
    """An input sits on a pole of the requested formula."""


class IllConditionedModelError(MirrorlessError, RuntimeError):
    pass


class ConfigError(MirrorlessError, ValueError):
    """Configuration validation failure; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
