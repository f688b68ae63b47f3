"""Nonlocal Cahn-Hilliard-Hele-Shaw simulator with degenerate mobility and logarithmic potential."""

__version__ = "0.1.0"
