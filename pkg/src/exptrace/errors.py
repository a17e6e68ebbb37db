"""Exception hierarchy shared by all modules."""


class TraceModelError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(TraceModelError, ValueError):
    """Invalid model, strategy or run configuration."""


class DomainError(TraceModelError, ValueError):
    """An observation lies outside the model's domain."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ParameterError(TraceModelError, ValueError):
    """A parameter matrix is not a member of the model's parameter space."""


class StrategyError(TraceModelError, ValueError):
    """The requested evaluation strategy cannot handle the model's domain."""


class NormalizerError(TraceModelError, ArithmeticError):
    """The log-normalizer or its moments could not be evaluated."""


class DivergenceError(NormalizerError):
    """Partial sums kept growing up to the truncation cap: gamma(M) is infinite."""


class NonExistenceError(TraceModelError, ArithmeticError):
    """The maximum likelihood estimate does not exist for the given data."""


class SamplerError(TraceModelError, RuntimeError):
    """A conditional could not be resolved within its truncation limits."""


class InferenceError(TraceModelError, ArithmeticError):
    """Singular covariance or rank-deficient restriction in a Wald test."""
