"""Learning components for guided-wave weld inspection datasets."""

__version__ = "0.1.0"
