"""Metric almost periodicity: distances, almost-period scans, Bohr-Fourier analysis."""

__version__ = "0.1.0"
