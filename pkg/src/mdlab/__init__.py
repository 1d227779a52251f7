"""Monte Carlo laboratory for moderate deviations of martingales.

Two model families are provided: the elephant random walk with random step
sizes (:mod:`mdlab.erw`) and the bounded-noise AR(1) process
(:mod:`mdlab.ar1`).  :mod:`mdlab.mc` runs reproducible experiments on them
and :mod:`mdlab.normal` supplies the normal tail they are compared to.
"""

from .errors import ConsistencyError, DegeneratePathError, DomainError, NumericError, ReplicateError

__version__ = "0.1.0"

__all__ = [
    "ConsistencyError",
    "DegeneratePathError",
    "DomainError",
    "NumericError",
    "ReplicateError",
    "__version__",
]
