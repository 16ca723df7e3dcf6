"""Syndrome-based neural decoding laboratory for linear block codes."""

__version__ = "0.1.0"
