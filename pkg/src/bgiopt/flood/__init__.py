"""Raster flood simulation with a compiled kernel and a NumPy fallback."""

from .backends import available_backends, kernel_name
from .engine import DepthField, FloodParams, MassReport, mass_balance, simulate

__all__ = [
    "FloodParams",
    "MassReport",
    "DepthField",
    "simulate",
    "mass_balance",
    "kernel_name",
    "available_backends",
]
