"""Mittag-Leffler spectral propagators for time-fractional Schrodinger-type equations."""

__version__ = "0.1.0"
