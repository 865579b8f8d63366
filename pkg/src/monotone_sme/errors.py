"""Exception types raised by the toolkit."""


class SMEError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(SMEError, ValueError):
    def __init__(self, expected, got, what="point"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} has dimension {got}, expected {expected}")


class DomainError(SMEError, ValueError):
    """A value lies outside the set it is required to belong to."""


class ConfigError(SMEError, ValueError):
    """Invalid or unknown configuration entry; the message names the field."""


class GridTooLarge(SMEError, ValueError):
    pass
