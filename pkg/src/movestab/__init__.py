"""Stabilization of the wave equation on a periodically moving domain."""

__version__ = "0.1.0"
