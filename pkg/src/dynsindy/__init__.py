"""Identification of non-autonomous ODEs with time-varying sparse coefficients."""

__version__ = "0.1.0"
