"""Numerical renormalisation laboratory for Henon-like maps."""

from ._kernels import BACKEND
from .cheb import (Affine2, Box, Fun1, Fun2, Interval, UNIT, UNIT_BOX,
                   compose1, cross_ratio, differentiate, fit, fit2,
                   find_roots, identity_fun, schwarzian)
from .config import Config, DEFAULT
from .errors import RenormError

__version__ = "0.1.0"

__all__ = [
    "Affine2", "BACKEND", "Box", "Config", "DEFAULT", "Fun1", "Fun2",
    "Interval", "RenormError", "UNIT", "UNIT_BOX", "compose1", "cross_ratio",
    "differentiate", "fit", "fit2", "find_roots", "identity_fun",
    "schwarzian", "__version__",
]
