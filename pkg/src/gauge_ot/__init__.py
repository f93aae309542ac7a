"""Gauge-theoretic optimal transport of vector half-densities and matrix densities on flat tori."""

__version__ = "0.1.0"
