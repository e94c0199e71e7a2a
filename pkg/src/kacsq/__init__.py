"""Commuting squares with scalar corner and their desk-scale invariants."""

__version__ = "0.1.0"
