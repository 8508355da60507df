"""Exception types raised across the package."""


class KicError(ValueError):
    """Base class for domain errors."""


class DimensionError(KicError):
    pass


class InsufficientDataError(KicError):
    pass


class MissingInputError(KicError):
    pass


class WrongEstimatorError(KicError):
    pass


class SpecError(KicError):
    """An observable spec is malformed or does not match the data."""


class ClosureError(KicError):
    """A lifted term cannot be rebuilt from the model's outputs."""


class ParseError(KicError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelLoadError(KicError):
    pass
