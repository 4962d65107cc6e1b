"""Guided-wave weld inspection toolkit."""

__version__ = "0.1.0"
