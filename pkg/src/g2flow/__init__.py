"""Numerical toolkit for SU(3)-structure flows and the G2 structures they generate."""

__version__ = "0.1.0"
