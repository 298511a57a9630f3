"""Analytical die-to-die 3D placement for F2F-bonded two-die ICs."""

__version__ = "0.1.0"
