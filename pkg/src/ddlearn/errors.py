"""Exception types raised across the package."""


class DDLearnError(Exception):
    pass


class DimensionError(DDLearnError, ValueError):
    """Array shapes do not line up; the message names the offending axis."""


class ConfigError(DDLearnError, ValueError):
    pass


class InputError(DDLearnError, ValueError):
    pass


class StateError(DDLearnError, RuntimeError):
    pass


class SchemaError(DDLearnError, ValueError):
    pass


class ParseError(DDLearnError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ReportError(DDLearnError, ValueError):
    pass


class TrainingError(DDLearnError, RuntimeError):
    """Raised when a loss turns non-finite; carries the diagnostic dump."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SuiteError(DDLearnError, RuntimeError):
    """A run inside a task suite failed; finished runs are already on disk."""

    def __init__(self, message, completed=()):
        super().__init__(message)
        self.completed = list(completed)
