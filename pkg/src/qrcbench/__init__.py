"""Quantum reservoir computing simulator and generalisation-bound workbench."""

__version__ = "0.1.0"
