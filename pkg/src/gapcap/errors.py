"""Exception types raised across gapcap."""


class GapcapError(Exception):
    """Base class for toolkit errors."""


class RangeError(GapcapError, ValueError):
    """A value falls outside the span covered by a tabulated curve."""


class DomainError(GapcapError, ValueError):
    """An input lies outside the physical domain of a model."""


class InputError(GapcapError, ValueError):
    """Malformed input data (ordering, shapes, non-finite values)."""


class BudgetError(GapcapError, ValueError):
    """Tolerance budget cannot be satisfied."""

    def __init__(self, message, shortfall=None):
        super().__init__(message)
        self.shortfall = shortfall


class FitError(GapcapError, RuntimeError):
    """A fit could not produce a usable estimate."""


class FitQualityError(FitError):
    pass


class ResolutionError(FitError):
    pass


class RankDeficiencyError(FitError):
    pass


class DegeneracyError(FitError):
    pass


class ConfigError(GapcapError, ValueError):
    """Invalid project configuration. ``field`` names the offending key path."""

    def __init__(self, message, field=None, line=None, column=None):
        loc = ""
        if field:
            loc += f"{field}: "
        if line is not None:
            loc = f"line {line}, column {column}: " + loc
        super().__init__(loc + message)
        self.field = field
        self.line = line
        self.column = column
