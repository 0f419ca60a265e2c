"""Spectral engine for cutoff-free circuit QED."""

__version__ = "0.1.0"
