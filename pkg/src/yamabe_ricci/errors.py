"""Exception hierarchy shared by all modules."""


class YamabeError(Exception):
    """Base class for package errors."""


class DomainError(YamabeError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ValidationError(YamabeError, ValueError):
    """A metric or radial function violates its invariants."""


class MetricSpecError(ValidationError):
    """A JSON metric specification is malformed.

    ``field`` names the offending key so the CLI can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"field {field!r}: {message}")
        self.field = field


class NotApplicable(YamabeError):
    """The positive Ricci lower bound hypothesis fails (rho <= 0)."""
