"""Numerical tools for traces of separately convex functions of two variables."""

__version__ = "0.1.0"

# fixed seed of every randomized check
DEFAULT_SEED = 0x5E9C0

from .func1d import Function1D, catalog_get, load_function  # noqa: E402
from .kernels import Field2D  # noqa: E402

__all__ = ["DEFAULT_SEED", "Field2D", "Function1D", "catalog_get", "load_function"]
