"""Exceptions raised by surveyfda.

Every error carries the exit code the command line reports for it, so
the CLI can map failures in a single place.
"""


class SurveyFdaError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def annotate(self, label: str) -> "SurveyFdaError":
        """Prefix this error's message with some context, e.g. a pipeline
        stage or a Gibbs iteration. Returns self so it can be re-raised.
        """
        self.message = f"{label}: {self.message}"
        self.args = (self.message,)
        return self

    def __str__(self) -> str:
        return self.message


class DataValidationError(SurveyFdaError):
    """Input data is malformed: ragged, non-finite, misaligned, etc."""


class ConfigError(DataValidationError):
    """A run configuration failed validation."""


class DegenerateDataError(SurveyFdaError):
    """Data carries no information for the requested computation."""


class DegenerateDesignError(SurveyFdaError):
    """A survey design cannot be constructed from the given weights."""


class ParameterDomainError(SurveyFdaError):
    """A distribution was requested with parameters outside its domain."""

    exit_code = 2


class NumericalSingularityError(SurveyFdaError):
    """A Gaussian block could not be factorized, even with jitter."""

    exit_code = 2

    def __init__(self, message: str, block: str | None = None):
        super().__init__(message)
        self.block = block


class ResampleExhaustedError(SurveyFdaError):
    """Repeated Poisson subsampling kept producing an empty sample."""

    exit_code = 2


class SimulationFailedError(SurveyFdaError):
    """Too many simulation replicates failed for the study to be usable."""

    exit_code = 2
