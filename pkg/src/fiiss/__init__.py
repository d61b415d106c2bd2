"""Simulation and verification of fractionally integrated inverse stable
subordinators."""

__version__ = "0.1.0"

from .analytic import FiissParams, Regime, classify  # noqa: E402
from .errors import DomainError, FiissError, RangeError, ResourceCapError, WindowError  # noqa: E402
from .sampling import EmpiricalSample, RandomSource  # noqa: E402

__all__ = [
    "__version__", "FiissParams", "Regime", "classify", "EmpiricalSample", "RandomSource",
    "FiissError", "DomainError", "RangeError", "ResourceCapError", "WindowError",
]
