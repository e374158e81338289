"""Numerical checks of weighted improved Hardy inequalities and the related Kolmogorov evolution."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigurationError,
    DomainError,
    EvaluationError,
    HardyLabError,
    NotFoundError,
    NumericalError,
)

__all__ = [
    "ConfigurationError",
    "DomainError",
    "EvaluationError",
    "HardyLabError",
    "NotFoundError",
    "NumericalError",
]
