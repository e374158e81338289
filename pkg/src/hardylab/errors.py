"""Exception types shared across hardylab."""


class HardyLabError(Exception):
    """Base class for every error raised by the package."""


class DomainError(HardyLabError, ValueError):
    """An argument lies outside the domain where a closed form is defined."""


class ConfigurationError(HardyLabError, ValueError):
    """Invalid numerical or experiment configuration."""


class EvaluationError(HardyLabError, ArithmeticError):
    """A sampled integrand or identity produced a non-finite value."""


class NotFoundError(HardyLabError, LookupError):
    """A search over a finite lattice found no admissible candidate."""


class NumericalError(HardyLabError, RuntimeError):
    """An iterative solver failed, or a linear system was singular."""
