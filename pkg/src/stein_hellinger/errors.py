"""Exception hierarchy shared by all modules."""


class SteinHellingerError(Exception):
    pass


class ConfigError(SteinHellingerError, ValueError):
    """Invalid parameter or configuration value.

    ``line`` is the 1-based line in the originating JSON file when known.
    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line

    def __str__(self):
        msg = super().__str__()
        if self.line is not None:
            return f"line {self.line}: {msg}"
        return msg


class DomainError(SteinHellingerError, ValueError):
    pass


class NumericError(SteinHellingerError, ArithmeticError):
    """Non-finite or underflowing value; ``x`` is the offending point."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class DegeneracyError(SteinHellingerError, ValueError):
    pass
