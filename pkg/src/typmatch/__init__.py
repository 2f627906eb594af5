"""Typicality matching of correlated random graphs."""

__version__ = "0.1.0"
