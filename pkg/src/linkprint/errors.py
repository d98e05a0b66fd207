"""Exception hierarchy.

Every error raised on purpose by the package derives from `LinkprintError`.
The `exit_code` attribute is what the command line returns when the error
escapes a subcommand.
"""


class LinkprintError(Exception):
    exit_code = 4


class ValidationError(LinkprintError, ValueError):
    """Invalid value for a configuration or data object."""

    exit_code = 3


class ConfigError(ValidationError):
    pass


# link simulator
class InvalidFlowError(ValidationError):
    pass


class InvalidRequestError(ValidationError):
    pass


class InternalInvariantError(LinkprintError, RuntimeError):
    pass


# victim profiles
class ProfileParseError(ValidationError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


class ProfileValidationError(ValidationError):
    pass


# datasets
class DegenerateDataError(ValidationError):
    pass


class StratificationError(ValidationError):
    pass


class InvalidTargetError(ValidationError):
    pass


class CsvFormatError(ValidationError):
    def __init__(self, message, row=None):
        super().__init__(f"row {row}: {message}" if row is not None else message)
        self.row = row


class CsvWidthError(CsvFormatError):
    pass


class CsvLabelError(CsvFormatError):
    pass


class CsvNumericError(CsvFormatError):
    pass


class EmptyDatasetError(CsvFormatError):
    pass


# models
class DegenerateModelError(ValidationError):
    pass


class ShapeError(ValidationError):
    pass


class FoldError(ValidationError):
    pass


class ConvergenceError(LinkprintError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DivergenceError(ConvergenceError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class ModelFormatError(ValidationError):
    pass


class ReportIOError(LinkprintError, OSError):
    exit_code = 5
