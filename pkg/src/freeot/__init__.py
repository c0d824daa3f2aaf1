"""Free convolutions computed two ways: entropic transport and subordination."""

from .errors import (BracketError, ConvergenceError, DomainError, FreeOTError,
                     InvariantError, NotRealRootedError)
from .measures import (DiscreteMeasure, bernoulli, classical_convolve, log_potential,
                       make_measure, point_mass, quantile, scale_pushforward,
                       signed_log_potential, wasserstein1)

__version__ = "0.1.0"
