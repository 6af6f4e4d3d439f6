"""Concentration of sample means under sublinear expectations."""

__version__ = "0.1.0"
