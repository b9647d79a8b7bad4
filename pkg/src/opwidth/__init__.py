"""Numerical laboratory for the data complexity of operator learning.

Two halves share one toolbox.  The adversarial half constructs explicit
witnesses — bump partitions, Gaussian-transported bumps, and hypercube
embeddings — certifying that sampling-based reconstruction cannot beat
known width lower bounds.  The constructive half is a from-scratch Fourier
neural operator with hand-written reverse-mode gradients, whose closed-form
Lipschitz/entropy/sample-size bounds are each audited numerically against
the shipped forward pass.
"""

from .errors import FormatError, InfeasibleError, OpwidthError, ValidationError
from .grids import GridFunction, NormSpec, lp_distance, norm

__version__ = "0.1.0"

__all__ = [
    "FormatError",
    "GridFunction",
    "InfeasibleError",
    "NormSpec",
    "OpwidthError",
    "ValidationError",
    "__version__",
    "lp_distance",
    "norm",
]
