"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A numeric parameter is outside its valid range."""


class InputError(ValueError):
    """Input data is malformed (non-finite, wrong shape, asymmetric)."""


class ArityError(ValueError):
    """A dataset has the wrong number of rows."""


class BudgetKindError(TypeError):
    """Budgets of different kinds were combined without conversion."""


class DegenerateDataError(ValueError):
    """A covariance estimate is numerically singular."""


class IncompleteClusteringError(RuntimeError):
    """The clustering loop hit its iteration cap before finding k clusters.

    The partial partition found so far is kept in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ReportParseError(ValueError):
    """A results file could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(ValueError):
    """An experiment configuration is invalid."""
