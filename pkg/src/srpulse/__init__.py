"""Robust pulse design and interferometer simulation on the 87Sr clock transition."""

__version__ = "0.1.0"
