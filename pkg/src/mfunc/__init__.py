"""Densities (M-functions) for the value distribution of log of Euler products.

Covers the Riemann zeta function, L(Delta, s) for Ramanujan's Delta and its
symmetric powers, with empirical checks on vertical lines and Sato-Tate
statistics of the Satake angles.
"""

__version__ = "0.1.0"

from .errors import (AccuracyError, DataError, DomainError, MFuncError,  # noqa: E402
                     ResourceError)

__all__ = ["__version__", "MFuncError", "DomainError", "DataError", "AccuracyError",
           "ResourceError"]
