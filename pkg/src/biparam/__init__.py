"""Biparameter harmonic analysis on shifted dyadic grids."""

__version__ = "0.1.0"
