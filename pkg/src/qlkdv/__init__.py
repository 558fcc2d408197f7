"""Pseudospectral laboratory for quasilinear third-order dispersive systems."""

__version__ = "0.1.0"

from ._kernels import ACTIVE_BACKEND

__all__ = ["ACTIVE_BACKEND", "__version__"]
