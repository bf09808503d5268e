"""Exception and warning types shared by every module."""


class TextPipesError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class FormatError(TextPipesError):
    pass


class LabelError(TextPipesError):
    pass


class ConfigError(TextPipesError):
    exit_code = 2


class ShapeError(TextPipesError):
    pass


class DomainError(TextPipesError):
    pass


class DataError(TextPipesError):
    pass


class NumericError(TextPipesError):
    exit_code = 4


class VersionError(TextPipesError):
    pass


class SearchError(TextPipesError):
    exit_code = 4


class EvaluationTimeout(TextPipesError):
    """Raised cooperatively when a fit runs past its deadline."""

    exit_code = 4


class ConvergenceWarning(UserWarning):
    pass
