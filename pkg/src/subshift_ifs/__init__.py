"""Attractors of iterated function systems constrained by sub-shifts."""

__version__ = "0.1.0"
