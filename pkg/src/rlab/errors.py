"""Exception types shared across the package."""


class RlabError(Exception):
    """Base class for package errors."""


class ParameterError(RlabError, ValueError):
    pass


class DomainError(RlabError, ValueError):
    pass


class ConfigError(RlabError, ValueError):
    pass


class NumericalError(RlabError, ArithmeticError):
    pass


class GenerationError(NumericalError):
    """The prior sampler could not factorize the Gram matrix."""


class ClassificationError(RlabError):
    """The maximizer fits neither the interior-quadratic nor the endpoint-linear case."""


class BudgetExhausted(RlabError):
    """Raised by an oracle once its query budget has been spent."""


class SweepError(RlabError):
    pass
