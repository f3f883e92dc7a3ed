"""Exception hierarchy shared by every colme module."""


class ColmeError(Exception):
    """Base class for all package errors."""


class DomainError(ColmeError, ValueError):
    """An argument lies outside the domain of a formula."""


class UndefinedEstimate(ColmeError):
    """An estimator was queried before it had enough data."""


class InsufficientSamples(ColmeError, ValueError):
    pass


class InsufficientData(ColmeError, ValueError):
    pass


class DimensionMismatch(ColmeError, ValueError):
    pass


class InfeasibleGraph(ColmeError, ValueError):
    pass


class RetryExhausted(ColmeError, RuntimeError):
    pass


class NoSuchEdge(ColmeError, KeyError):
    pass


class EmptyCandidateList(ColmeError):
    pass


class ConfigError(ColmeError, ValueError):
    """Scenario configuration failed validation.

    ``problems`` holds one human-readable message per violated constraint.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
