"""Exception hierarchy for catgate."""


class CatgateError(Exception):
    """Base class for every error raised by catgate."""


class ConfigError(CatgateError):
    """A run configuration could not be read or failed validation."""

    def __init__(self, message: str, key: str | None = None) -> None:
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ParameterError(CatgateError, ValueError):
    """A physical or numerical input is outside its valid range."""


class NumericalError(CatgateError):
    """A simulation produced numbers that cannot be trusted."""


class StepSizeError(NumericalError):
    """The integration step advances the fastest phase too far per step."""


class PositivityError(NumericalError):
    """A density matrix developed a negative eigenvalue beyond tolerance."""


class NormalizationError(NumericalError):
    """A state is not normalized to within tolerance."""


class TruncationError(NumericalError):
    """The Fock truncation cannot hold the requested state."""


class LogicalExtractionError(NumericalError):
    """Too much population left the logical subspace to read out a truth table."""
