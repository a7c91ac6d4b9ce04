"""Numerical laboratory for the zero-relaxation limit of the semi-linear p-system
with random initial data."""

__version__ = "0.1.0"
