"""Exception hierarchy.

Every error carries a short machine-readable ``code`` which the command-line
front end prints on failure.
"""


class SpaceFillError(Exception):
    code = "error"


class InvalidArgumentError(SpaceFillError, ValueError):
    code = "invalid-argument"


class InsufficientPointsError(InvalidArgumentError):
    code = "insufficient-points"


class UnsupportedError(SpaceFillError, ValueError):
    code = "unsupported"


class UnsupportedDimensionError(UnsupportedError):
    code = "unsupported-dimension"


class DegenerateDesignError(SpaceFillError, ValueError):
    code = "degenerate-design"


class UndefinedCorrelationError(DegenerateDesignError):
    code = "undefined-correlation"


class ParseError(SpaceFillError, ValueError):
    code = "parse-error"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class PreconditionError(SpaceFillError, ValueError):
    code = "precondition"


class FitFailure(SpaceFillError, RuntimeError):
    code = "fit-failure"


class DegenerateDataError(FitFailure):
    code = "degenerate-data"


class NotFoundError(SpaceFillError, KeyError):
    code = "not-found"

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ConfigurationError(SpaceFillError, ValueError):
    code = "configuration"


class InternalConsistencyError(SpaceFillError, RuntimeError):
    code = "internal-consistency"
