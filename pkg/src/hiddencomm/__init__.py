"""Hidden community recovery: rate functions, thresholds, estimators and a Monte Carlo harness."""

__version__ = "0.1.0"

from .dists import Bernoulli, DistPair, DomainError, FiniteSupport, Gaussian, parse_pair  # noqa: E402
from .model import DiagMode, Instance, LlrMatrix, llr_matrix, sample_instance  # noqa: E402

__all__ = [
    "Bernoulli", "DistPair", "DomainError", "FiniteSupport", "Gaussian", "parse_pair",
    "DiagMode", "Instance", "LlrMatrix", "llr_matrix", "sample_instance", "__version__",
]
