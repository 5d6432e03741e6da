"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: input problems exit with 2,
configuration problems with 3, and pipeline failures with 1.
"""


class GridCompressError(Exception):
    """Base class for all errors raised by this package."""


class InputError(GridCompressError, ValueError):
    """Input data is malformed or violates a model invariant."""


class A1ParseError(InputError):
    pass


class IngestionError(InputError):
    pass


class IntegrityError(InputError):
    """A value index or mapping is internally inconsistent."""


class UndefinedRatioError(GridCompressError, ZeroDivisionError):
    pass


class ConfigError(GridCompressError):
    pass


class PipelineError(GridCompressError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class LlmError(PipelineError):
    """Transport failure talking to the model endpoint, after retries."""

    def __init__(self, message: str):
        super().__init__("llm", message)


class MappingError(InputError):
    """A range does not fit the extracted grid it claims to be in."""
