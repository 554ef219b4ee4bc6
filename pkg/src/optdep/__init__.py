"""Copula-based dependency matrices and portfolio optimisation for options."""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
