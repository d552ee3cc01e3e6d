"""Lorentzian distance via steep functions and spectral-triple operators."""

__all__ = ["__version__"]

__version__ = "0.1.0"
